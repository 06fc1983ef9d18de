#pragma once

#include "pqstrip/mesh.hpp"

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace pqstrip {

using cplx = std::complex<double>;

/// Per-face orthonormal tangent bases and the complex representation of every
/// edge direction in the frames of its incident faces. Tangent fields are
/// stored as interleaved 2F vectors (x_f, y_f) in these frames; power fields
/// as F complex numbers.
struct LocalFrames {
    std::vector<Eigen::Vector3d> e1;
    std::vector<Eigen::Vector3d> e2;
    std::vector<Eigen::Vector3d> normal;

    // Unit direction of (V[v1] - V[v0]) of each edge, seen from f0 / f1.
    std::vector<cplx> edge_in_f0;
    std::vector<cplx> edge_in_f1;

    cplx to_complex(int f, const Eigen::Vector3d& v) const { return {v.dot(e1[f]), v.dot(e2[f])}; }
    Eigen::Vector3d to_world(int f, cplx z) const { return z.real() * e1[f] + z.imag() * e2[f]; }
    Eigen::Vector3d to_world(int f, const Eigen::Vector2d& v) const { return v.x() * e1[f] + v.y() * e2[f]; }

    /// Parallel transport across edge e: rotates a vector given in the frame
    /// of face `from` into the frame of the other incident face.
    cplx transport(int e, int from, cplx z, const TriMesh& mesh) const;
};

/// Throws MeshError on a degenerate (zero-area) face.
LocalFrames build_frames(const TriMesh& mesh);

struct MassMatrices {
    Eigen::VectorXd face;    // m(f), face areas
    Eigen::VectorXd vertex;  // m(v), barycentric areas
    Eigen::VectorXd edge;    // m(e)

    /// Diagonal of M_X: face masses duplicated per tangent component.
    Eigen::VectorXd tangent() const;
};

MassMatrices build_masses(const TriMesh& mesh);

/// Helpers between interleaved 2F tangent vectors and per-face complex values.
Eigen::VectorXcd to_complex_field(const Eigen::VectorXd& interleaved);
Eigen::VectorXd to_interleaved(const Eigen::VectorXcd& field);

/// Per-face world-space vectors of an interleaved tangent field.
Eigen::MatrixX3d to_world_field(const LocalFrames& frames, const Eigen::VectorXd& interleaved);

}  // namespace pqstrip
