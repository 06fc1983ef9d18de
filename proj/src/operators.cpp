#include "pqstrip/operators.hpp"

#include <Eigen/Geometry>

namespace pqstrip {

DiscreteOperators build_operators(const TriMesh& mesh, const LocalFrames& frames, const MassMatrices& masses) {
    const int nf = mesh.num_faces(), nv = mesh.num_vertices(), ne = mesh.num_edges();
    DiscreteOperators ops;
    ops.corner_gradient.resize(nf);

    std::vector<Eigen::Triplet<double>> gt, dt;
    gt.reserve(6 * nf);
    dt.reserve(6 * nf);
    for (int f = 0; f < nf; ++f) {
        const double area = masses.face(f);
        for (int c = 0; c < 3; ++c) {
            const Eigen::Vector3d pj = mesh.V.row(mesh.F(f, (c + 1) % 3));
            const Eigen::Vector3d pk = mesh.V.row(mesh.F(f, (c + 2) % 3));
            const Eigen::Vector3d g = frames.normal[f].cross(pk - pj) / (2.0 * area);
            Eigen::Vector2d g2(g.dot(frames.e1[f]), g.dot(frames.e2[f]));
            ops.corner_gradient[f][c] = g2;
            const int v = mesh.F(f, c);
            for (int j = 0; j < 2; ++j) {
                gt.emplace_back(2 * f + j, v, g2(j));
                dt.emplace_back(v, 2 * f + j, g2(j) * area);
            }
        }
    }
    ops.G.resize(2 * nf, nv);
    ops.G.setFromTriplets(gt.begin(), gt.end());
    ops.D.resize(nv, 2 * nf);
    ops.D.setFromTriplets(dt.begin(), dt.end());

    ops.edge_f0.resize(ne);
    ops.edge_f1.assign(ne, Eigen::Vector2d::Zero());
    ops.curl_row.assign(ne, -1);
    std::vector<Eigen::Triplet<double>> ct;
    for (int e = 0; e < ne; ++e) {
        const Edge& ed = mesh.edges[e];
        const Eigen::Vector3d d = mesh.V.row(ed.v1) - mesh.V.row(ed.v0);
        ops.edge_f0[e] = {d.dot(frames.e1[ed.f0]), d.dot(frames.e2[ed.f0])};
        if (ed.f1 < 0) continue;
        ops.edge_f1[e] = {d.dot(frames.e1[ed.f1]), d.dot(frames.e2[ed.f1])};
        const int row = static_cast<int>(ops.curl_edges.size());
        ops.curl_row[e] = row;
        ops.curl_edges.push_back(e);
        for (int j = 0; j < 2; ++j) {
            ct.emplace_back(row, 2 * ed.f0 + j, ops.edge_f0[e](j));
            ct.emplace_back(row, 2 * ed.f1 + j, -ops.edge_f1[e](j));
        }
    }
    ops.C.resize(static_cast<Eigen::Index>(ops.curl_edges.size()), 2 * nf);
    ops.C.setFromTriplets(ct.begin(), ct.end());
    return ops;
}

Eigen::VectorXd gradient(const DiscreteOperators& ops, const Eigen::VectorXd& u) { return ops.G * u; }
Eigen::VectorXd divergence(const DiscreteOperators& ops, const Eigen::VectorXd& gamma) { return ops.D * gamma; }
Eigen::VectorXd curl(const DiscreteOperators& ops, const Eigen::VectorXd& xi) { return ops.C * xi; }

Eigen::MatrixX3d gradient_world(const LocalFrames& frames, const DiscreteOperators& ops, const Eigen::VectorXd& u) {
    return to_world_field(frames, ops.G * u);
}

}  // namespace pqstrip
