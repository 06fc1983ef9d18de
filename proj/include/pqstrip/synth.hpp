#pragma once

#include "pqstrip/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <numbers>
#include <string>

namespace pqstrip {

enum class SurfaceKind { plane, cylinder, cone, clothoid, composite, creased };
enum class TriangulationStyle { regular, flipped, randomized };

SurfaceKind parse_surface_kind(const std::string& name);
std::string to_string(SurfaceKind kind);
TriangulationStyle parse_triangulation_style(const std::string& name);
std::string to_string(TriangulationStyle style);

struct SynthParams {
    SurfaceKind kind = SurfaceKind::cylinder;
    // Cells across the rulings (around / along the profile / per triangle
    // edge for the composite) and along the rulings (across the flaps).
    int nu = 40;
    int nv = 10;
    TriangulationStyle style = TriangulationStyle::regular;
    unsigned seed = 1;

    double radius = 0.2;   // cylinder radius; bend radius of composite flaps and creased arms
    double length = 1.0;   // extent along the rulings; triangle side for the composite
    double width = 1.0;    // plane x extent; clothoid profile length
    double flap_width = 0.25;  // composite flap width; creased arm length
    double sweep = 2.0 * std::numbers::pi;  // cylinder angular span, < 2 pi gives an open patch
    double half_angle = std::numbers::pi / 6.0;  // cone
    double slant_min = 0.5;
    double slant_max = 1.0;
    bool apex = false;                   // cone reaches its apex
    double kappa0 = 2.0;                 // clothoid curvature kappa(t) = kappa0 + kappa_rate * t
    double kappa_rate = 4.0;
    double fold_angle = 0.8;             // creased: dihedral deviation at the fold
};

/// Sampled analytic surface with per-face ground truth. `ruling` is the
/// analytic ruling at the face barycenter projected to the face plane (zero
/// rows where undefined, e.g. planar regions of the composite). `curvature`
/// is the analytic nonzero principal curvature.
struct SynthSurface {
    TriMesh mesh;
    Eigen::MatrixX3d ruling;
    Eigen::VectorXd curvature;
    int apex_vertex = -1;
};

/// Throws std::invalid_argument for fewer than 2 samples per direction or
/// invalid geometry parameters.
SynthSurface generate(const SynthParams& params);

/// Moves each interior vertex by a uniform random vector in the ball of
/// radius amplitude * mean edge length.
TriMesh perturb(const TriMesh& mesh, double amplitude, unsigned seed);

/// face, rx, ry, rz, curvature
void write_ground_truth_csv(const std::filesystem::path& path, const SynthSurface& surface);

}  // namespace pqstrip
