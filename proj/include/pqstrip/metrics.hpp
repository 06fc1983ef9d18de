#pragma once

#include "pqstrip/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace pqstrip {

/// 100 * line-line distance of the diagonals / their mean length. NaN for a
/// zero-length diagonal.
double quad_planarity(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                      const Eigen::Vector3d& d);

/// RMS of quad_planarity over the cyclic runs of 4 consecutive corners.
/// Consecutive repeated corners are merged first; triangles give 0.
/// Degenerate runs are skipped.
double polygon_planarity(const std::vector<Eigen::Vector3d>& polygon);

struct PlanarityStats {
    double max = 0.0;
    double mean = 0.0;
    int faces = 0;
};
PlanarityStats planarity(const Eigen::MatrixX3d& V, const std::vector<std::vector<int>>& faces);

/// Triangles of a polygon by minimum total area (centroid fan above
/// `max_dp` corners). Indices refer to the polygon; -1 is the centroid.
std::vector<Eigen::Vector3i> triangulate_polygon(const std::vector<Eigen::Vector3d>& polygon, int max_dp = 400);

struct TriangleSoup {
    std::vector<Eigen::Vector3d> a, b, c;
    int size() const { return static_cast<int>(a.size()); }
    double area() const;
};
TriangleSoup soup_of(const Eigen::MatrixX3d& V, const Eigen::MatrixX3i& F);
TriangleSoup soup_of(const Eigen::MatrixX3d& V, const std::vector<std::vector<int>>& faces);

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

struct HausdorffResult {
    double h = 0.0;         // percent of the reference diagonal
    double absolute = 0.0;  // symmetric distance
    double a_to_b = 0.0, b_to_a = 0.0;
    int samples = 0;        // per side
};

/// Symmetric Hausdorff distance from area-uniform samples (plus all
/// corners) on each side against exact point-to-triangle distances.
HausdorffResult hausdorff_relative(const TriangleSoup& A, const TriangleSoup& B, double diagonal,
                                   int samples = 100000, unsigned seed = 1);

struct AngularError {
    double max_deg = 0.0;
    double mean_deg = 0.0;  // area weighted
};

/// Per-face unsigned angle between 2-directional fields (mod pi). Rows with
/// a zero vector in either field are skipped.
AngularError angular_error(const Eigen::MatrixX3d& field, const Eigen::MatrixX3d& reference,
                           const Eigen::VectorXd& areas);

struct QualityReport {
    double p_max = 0.0, p_mean = 0.0;
    double h = 0.0;
    int hausdorff_samples = 0;
    double angular_max = 0.0, angular_mean = 0.0;
    bool has_angular = false;
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;
    int faces = 0, vertices = 0, strip_faces = 0, planar_faces = 0;
    std::vector<int> singular_vertices;
    double chord_deviation = 0.0;  // max polyline-to-chord distance on torsal levels, % of diagonal
    int chord_crossings = 0;
    std::string config;  // serialized run configuration

    std::string to_json() const;
};

void write_report(const std::filesystem::path& path, const QualityReport& report);

}  // namespace pqstrip
