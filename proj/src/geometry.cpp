#include "pqstrip/geometry.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace pqstrip {

cplx LocalFrames::transport(int e, int from, cplx z, const TriMesh& mesh) const {
    const Edge& ed = mesh.edges[e];
    if (from == ed.f0) return z * edge_in_f1[e] / edge_in_f0[e];
    return z * edge_in_f0[e] / edge_in_f1[e];
}

LocalFrames build_frames(const TriMesh& mesh) {
    const int nf = mesh.num_faces();
    LocalFrames frames;
    frames.e1.resize(nf);
    frames.e2.resize(nf);
    frames.normal.resize(nf);
    for (int f = 0; f < nf; ++f) {
        const Eigen::Vector3d a = mesh.V.row(mesh.F(f, 0)), b = mesh.V.row(mesh.F(f, 1)), c = mesh.V.row(mesh.F(f, 2));
        const Eigen::Vector3d cr = (b - a).cross(c - a);
        const double scale = (b - a).squaredNorm() + (c - a).squaredNorm();
        if (!(cr.norm() > 1e-14 * scale))
            throw MeshError("degenerate face " + std::to_string(f) + " (zero area)");
        const Eigen::Vector3d n = cr.normalized();
        const Eigen::Vector3d x = (b - a).normalized();
        frames.normal[f] = n;
        frames.e1[f] = x;
        frames.e2[f] = n.cross(x);
    }

    frames.edge_in_f0.resize(mesh.num_edges());
    frames.edge_in_f1.assign(mesh.num_edges(), cplx(0.0, 0.0));
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges[e];
        const Eigen::Vector3d d = (mesh.V.row(ed.v1) - mesh.V.row(ed.v0)).normalized();
        cplx z0 = frames.to_complex(ed.f0, d);
        frames.edge_in_f0[e] = z0 / std::abs(z0);
        if (ed.f1 >= 0) {
            cplx z1 = frames.to_complex(ed.f1, d);
            frames.edge_in_f1[e] = z1 / std::abs(z1);
        }
    }
    return frames;
}

Eigen::VectorXd MassMatrices::tangent() const {
    Eigen::VectorXd out(2 * face.size());
    for (Eigen::Index f = 0; f < face.size(); ++f) out(2 * f) = out(2 * f + 1) = face(f);
    return out;
}

MassMatrices build_masses(const TriMesh& mesh) {
    MassMatrices m;
    const int nf = mesh.num_faces();
    m.face.resize(nf);
    m.vertex = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (int f = 0; f < nf; ++f) {
        m.face(f) = mesh.face_area(f);
        for (int c = 0; c < 3; ++c) m.vertex(mesh.F(f, c)) += m.face(f) / 3.0;
    }
    m.edge.resize(mesh.num_edges());
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges[e];
        const Eigen::Vector3d p0 = mesh.V.row(ed.v0), p1 = mesh.V.row(ed.v1);
        const Eigen::Vector3d mid = 0.5 * (p0 + p1);
        const double len = (p1 - p0).norm();
        double dual = (mesh.barycenter(ed.f0) - mid).norm();
        double area = m.face(ed.f0);
        if (ed.f1 >= 0) {
            dual += (mesh.barycenter(ed.f1) - mid).norm();
            area += m.face(ed.f1);
        }
        m.edge(e) = len / dual * area / 2.0;
    }
    return m;
}

Eigen::VectorXcd to_complex_field(const Eigen::VectorXd& interleaved) {
    const Eigen::Index nf = interleaved.size() / 2;
    Eigen::VectorXcd out(nf);
    for (Eigen::Index f = 0; f < nf; ++f) out(f) = cplx(interleaved(2 * f), interleaved(2 * f + 1));
    return out;
}

Eigen::VectorXd to_interleaved(const Eigen::VectorXcd& field) {
    Eigen::VectorXd out(2 * field.size());
    for (Eigen::Index f = 0; f < field.size(); ++f) {
        out(2 * f) = field(f).real();
        out(2 * f + 1) = field(f).imag();
    }
    return out;
}

Eigen::MatrixX3d to_world_field(const LocalFrames& frames, const Eigen::VectorXd& interleaved) {
    const Eigen::Index nf = interleaved.size() / 2;
    Eigen::MatrixX3d out(nf, 3);
    for (Eigen::Index f = 0; f < nf; ++f)
        out.row(f) = frames.to_world(static_cast<int>(f), Eigen::Vector2d(interleaved(2 * f), interleaved(2 * f + 1)));
    return out;
}

}  // namespace pqstrip
