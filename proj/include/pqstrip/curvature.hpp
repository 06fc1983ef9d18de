#pragma once

#include "pqstrip/geometry.hpp"
#include "pqstrip/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace pqstrip {

struct ConfidenceParams {
    double theta1 = 0.8;
    double theta2 = -0.014;
};

/// Per-face curvature and ruling estimates.
struct RulingData {
    std::vector<Eigen::Matrix2d> S;  // shape operator in the face frame
    Eigen::VectorXd kappa1;          // max absolute principal curvature
    Eigen::VectorXd kappa2;          // min absolute principal curvature
    Eigen::VectorXd r;               // interleaved unit ruling directions
    Eigen::VectorXd r_perp;
    Eigen::VectorXcd R;              // r^2
    Eigen::VectorXcd R_perp;         // (r_perp)^2 = -R
    Eigen::VectorXd w;               // confidence weights
    ConfidenceParams params;
};

/// Area-weighted average of incident face normals, normalized.
Eigen::MatrixX3d vertex_normals(const TriMesh& mesh);

/// Least-squares symmetric fit of S to the normal variation along the three
/// edges of each face.
std::vector<Eigen::Matrix2d> shape_operators(const TriMesh& mesh, const LocalFrames& frames);

/// Unit eigenvector of the smallest-magnitude eigenvalue, and the absolute
/// principal curvatures. Ties resolve to the first frame axis.
struct PrincipalData {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    Eigen::Vector2d ruling = Eigen::Vector2d::UnitX();
};
PrincipalData principal_data(const Eigen::Matrix2d& S);

/// r -> r^2 as a complex number.
cplx power_of(const Eigen::Vector2d& r);

double confidence_weight(double kappa1, double kappa2, const ConfidenceParams& params = {});

/// Full ruling estimation; weights vanish on boundary and crease faces.
RulingData estimate_rulings(const TriMesh& mesh, const LocalFrames& frames, const ConfidenceParams& params = {});

/// face, rx, ry, rz, px, py, pz, w, kappa1, kappa2
void write_ruling_csv(const std::filesystem::path& path, const LocalFrames& frames, const RulingData& data);

}  // namespace pqstrip
