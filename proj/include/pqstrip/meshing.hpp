#pragma once

#include "pqstrip/integration.hpp"
#include "pqstrip/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace pqstrip {

/// Point where an integer level of u crosses a mesh edge. Crossings on
/// decoupled crease edges exist once per side.
struct LevelNode {
    int edge = -1;
    int side = 0;       // 0: seen from f0, 1: from f1 (decoupled edges only)
    double param = 0;   // position along v0 -> v1 of the edge
    double level = 0;   // level value in the chart of the edge's f0 (or its side)
    bool terminal = false;  // on a boundary or decoupled crease edge
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct LevelPolyline {
    std::vector<int> nodes;
    double level = 0;  // in the chart of the first node
    bool closed = false;
};

struct LevelSetNetwork {
    std::vector<LevelNode> nodes;
    std::vector<LevelPolyline> polylines;
    int perturbed_values = 0;  // corner values nudged off an integer
};

/// Traces every integer level of the seamless field. Corner values within
/// 1e-8 of an integer are moved off it consistently across seams.
LevelSetNetwork trace_levels(const TriMesh& mesh, const SeamlessField& field);

/// Keeps only the end points of open polylines. Closed polylines are kept
/// whole (they cannot become a single chord).
LevelSetNetwork collapse_valence2(const LevelSetNetwork& network);

enum class PolyFaceKind { strip, planar };
std::string to_string(PolyFaceKind kind);

struct PolyMesh {
    Eigen::MatrixX3d V;
    std::vector<std::vector<int>> faces;
    std::vector<PolyFaceKind> kind;
    std::vector<std::pair<double, double>> levels;  // bounding levels, chart of the first band
    std::vector<char> has_closed_level;              // face bounded by a closed level loop
    std::vector<std::vector<int>> source_faces;      // input triangles covered
    std::vector<int> source_vertex;                  // input vertex per output vertex, or -1
    int dropped_slivers = 0;                          // regions with fewer than 3 corners

    int num_faces() const { return static_cast<int>(faces.size()); }
    int num_vertices() const { return static_cast<int>(V.rows()); }
};

struct MeshingOptions {
    double planar_weight = 0.01;  // regions with lower mean w (or holding a singularity) are planar
};

/// Splits the surface along the traced levels and emits one polygon per
/// region: level chords plus the input boundary (and decoupled creases).
PolyMesh assemble_polymesh(const TriMesh& mesh, const SeamlessField& field, const CutGraph& cut,
                           const LevelSetNetwork& traced, const RawField& raw, const Eigen::VectorXd& weights,
                           const MeshingOptions& options = {});

/// V - E + F of the polygon mesh, per connected component.
std::vector<int> polymesh_euler(const PolyMesh& mesh);

/// Largest distance of a traced node to the chord of its open polyline,
/// over polylines whose edges only touch faces with w > threshold.
double chord_deviation(const TriMesh& mesh, const LevelSetNetwork& traced, const Eigen::VectorXd& weights,
                       double threshold = 0.4);

/// Pairs of collapsed chords that meet away from their end points
/// (segment distance below tolerance * bbox diagonal).
int count_chord_crossings(const LevelSetNetwork& collapsed, double diagonal, double tolerance = 1e-9);

void write_polymesh(const std::filesystem::path& path, const PolyMesh& mesh);

}  // namespace pqstrip
