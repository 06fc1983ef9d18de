#pragma once

#include "pqstrip/field.hpp"
#include "pqstrip/geometry.hpp"
#include "pqstrip/mesh.hpp"
#include "pqstrip/operators.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace pqstrip {

/// Seams turning each piece of the mesh into a disk with all singular
/// vertices on its boundary. Pieces are the face components left after
/// removing decoupled crease edges.
struct CutGraph {
    std::vector<char> cut_edge;        // per edge
    std::vector<char> decoupled_edge;  // crease edges with independent sides
    std::vector<signed char> face_sign;  // combing of the raw field, +-1
    std::vector<int> piece;            // per face
    int num_pieces = 0;
    std::vector<int> edges() const;    // cut edge indices
};

/// Dual BFS tree per piece; primal edges not crossed by it form the cut,
/// pruned back to paths that end on the boundary, on a decoupled crease or
/// at a singular vertex. With `sync_creases` crease edges are ordinary edges.
CutGraph build_cut(const TriMesh& mesh, const RawField& raw, bool sync_creases);

struct IntegrationOptions {
    double residual_warning = 0.1;  // relative M_X residual above which to warn
};

/// Per-corner scalar whose integer level sets are the strip boundaries.
/// Across an interior, non-decoupled edge: u(f1 side) = edge_sign * u(f0 side) + edge_shift.
struct SeamlessField {
    Eigen::MatrixX3d corner_u;   // F x 3
    Eigen::MatrixX3i corner_copy;  // F x 3, vertex copy id
    std::vector<int> copy_vertex;
    Eigen::VectorXd copy_u;
    std::vector<signed char> edge_sign;  // 0 on boundary and decoupled edges
    Eigen::VectorXd edge_shift;
    Eigen::VectorXd target;    // interleaved 2F, rho * combed gamma_c
    Eigen::VectorXd gradient;  // interleaved 2F, G u per face
    double rho = 1.0;
    double residual = 0.0;  // relative, M_X-weighted
    int integer_variables = 0;
    int rounding_steps = 0;

    double min_value() const { return copy_u.size() ? copy_u.minCoeff() : 0.0; }
    double max_value() const { return copy_u.size() ? copy_u.maxCoeff() : 0.0; }
};

/// Least-squares fit of G u to rho * gamma_c (combed by the cut) with exact
/// seams and u in Z + 1/2 at singular vertices; integer shifts by iterative
/// rounding. With `relaxed` the integers are left continuous.
SeamlessField integrate_u(const TriMesh& mesh, const DiscreteOperators& ops, const MassMatrices& masses,
                          const CutGraph& cut, const RawField& raw, const Eigen::VectorXd& gamma_c, double rho,
                          const IntegrationOptions& options = {}, bool relaxed = false);

/// rho giving about `strips` unit intervals over the range of a relaxed
/// pilot integration at rho = 1.
double resolution_for_strips(const TriMesh& mesh, const DiscreteOperators& ops, const MassMatrices& masses,
                             const CutGraph& cut, const RawField& raw, const Eigen::VectorXd& gamma_c, int strips);

/// OBJ copy of the mesh with u in the first texture coordinate.
void write_u_obj(const std::filesystem::path& path, const TriMesh& mesh, const SeamlessField& field);

}  // namespace pqstrip
