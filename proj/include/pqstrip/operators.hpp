#pragma once

#include "pqstrip/geometry.hpp"
#include "pqstrip/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <vector>

namespace pqstrip {

using SpMat = Eigen::SparseMatrix<double>;

/// Conforming gradient, integrated divergence and non-conforming curl.
/// Tangent fields are interleaved 2F vectors in the LocalFrames bases.
struct DiscreteOperators {
    SpMat G;  // 2F x V
    SpMat D;  // V x 2F, D = G^T M_X
    SpMat C;  // (#interior edges) x 2F

    std::vector<int> curl_edges;  // row of C -> edge
    std::vector<int> curl_row;    // edge -> row of C, -1 on the boundary

    // In-frame gradient of the hat function of corner c of face f.
    std::vector<std::array<Eigen::Vector2d, 3>> corner_gradient;
    // Unnormalized edge vector V[v1]-V[v0] in the frames of f0 and f1.
    std::vector<Eigen::Vector2d> edge_f0;
    std::vector<Eigen::Vector2d> edge_f1;
};

DiscreteOperators build_operators(const TriMesh& mesh, const LocalFrames& frames, const MassMatrices& masses);

Eigen::VectorXd gradient(const DiscreteOperators& ops, const Eigen::VectorXd& u);
Eigen::VectorXd divergence(const DiscreteOperators& ops, const Eigen::VectorXd& gamma);
Eigen::VectorXd curl(const DiscreteOperators& ops, const Eigen::VectorXd& xi);

/// Gradient as world-space vectors, one row per face.
Eigen::MatrixX3d gradient_world(const LocalFrames& frames, const DiscreteOperators& ops, const Eigen::VectorXd& u);

}  // namespace pqstrip
