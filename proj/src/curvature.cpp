#include "pqstrip/curvature.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <fstream>

namespace pqstrip {

Eigen::MatrixX3d vertex_normals(const TriMesh& mesh) {
    Eigen::MatrixX3d N = Eigen::MatrixX3d::Zero(mesh.num_vertices(), 3);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const Eigen::Vector3d a = mesh.V.row(mesh.F(f, 0)), b = mesh.V.row(mesh.F(f, 1)), c = mesh.V.row(mesh.F(f, 2));
        const Eigen::Vector3d n = (b - a).cross(c - a);  // 2 * area * unit normal
        for (int k = 0; k < 3; ++k) N.row(mesh.F(f, k)) += n.transpose();
    }
    for (int v = 0; v < N.rows(); ++v) {
        const double len = N.row(v).norm();
        if (len > 0) N.row(v) /= len;
    }
    return N;
}

std::vector<Eigen::Matrix2d> shape_operators(const TriMesh& mesh, const LocalFrames& frames) {
    const Eigen::MatrixX3d N = vertex_normals(mesh);
    std::vector<Eigen::Matrix2d> S(mesh.num_faces());
    for (int f = 0; f < mesh.num_faces(); ++f) {
        Eigen::Matrix<double, 6, 3> A = Eigen::Matrix<double, 6, 3>::Zero();
        Eigen::Matrix<double, 6, 1> b;
        for (int k = 0; k < 3; ++k) {
            const int va = mesh.F(f, k), vb = mesh.F(f, (k + 1) % 3);
            const Eigen::Vector3d d = mesh.V.row(vb) - mesh.V.row(va);
            const double len = d.norm();
            const Eigen::Vector3d dn = (N.row(vb) - N.row(va)).transpose() / len;
            const double ex = d.dot(frames.e1[f]) / len, ey = d.dot(frames.e2[f]) / len;
            // S = [[s11, s12], [s12, s22]], unknowns (s11, s12, s22)
            A(2 * k, 0) = ex;
            A(2 * k, 1) = ey;
            A(2 * k + 1, 1) = ex;
            A(2 * k + 1, 2) = ey;
            b(2 * k) = dn.dot(frames.e1[f]);
            b(2 * k + 1) = dn.dot(frames.e2[f]);
        }
        const Eigen::Vector3d s = A.colPivHouseholderQr().solve(b);
        S[f] << s(0), s(1), s(1), s(2);
    }
    return S;
}

PrincipalData principal_data(const Eigen::Matrix2d& S) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
    const Eigen::Vector2d lam = es.eigenvalues();
    PrincipalData out;
    const int small = std::abs(lam(0)) <= std::abs(lam(1)) ? 0 : 1;
    out.kappa1 = std::abs(lam(1 - small));
    out.kappa2 = std::abs(lam(small));
    if (out.kappa1 - out.kappa2 < 1e-10)
        out.ruling = Eigen::Vector2d::UnitX();
    else
        out.ruling = es.eigenvectors().col(small).normalized();
    return out;
}

cplx power_of(const Eigen::Vector2d& r) {
    const cplx z(r.x(), r.y());
    return z * z;
}

double confidence_weight(double kappa1, double kappa2, const ConfidenceParams& params) {
    const double d = kappa1 - kappa2;
    return params.theta1 * (1.0 - std::exp(params.theta2 * d * d));
}

RulingData estimate_rulings(const TriMesh& mesh, const LocalFrames& frames, const ConfidenceParams& params) {
    const int nf = mesh.num_faces();
    RulingData rd;
    rd.params = params;
    rd.S = shape_operators(mesh, frames);
    rd.kappa1.resize(nf);
    rd.kappa2.resize(nf);
    rd.r.resize(2 * nf);
    rd.r_perp.resize(2 * nf);
    rd.R.resize(nf);
    rd.R_perp.resize(nf);
    rd.w.resize(nf);
    for (int f = 0; f < nf; ++f) {
        const PrincipalData pd = principal_data(rd.S[f]);
        rd.kappa1(f) = pd.kappa1;
        rd.kappa2(f) = pd.kappa2;
        const Eigen::Vector2d perp(-pd.ruling.y(), pd.ruling.x());
        rd.r.segment<2>(2 * f) = pd.ruling;
        rd.r_perp.segment<2>(2 * f) = perp;
        rd.R(f) = power_of(pd.ruling);
        rd.R_perp(f) = power_of(perp);
        rd.w(f) = (mesh.boundary_face[f] || mesh.crease_face[f]) ? 0.0 : confidence_weight(pd.kappa1, pd.kappa2, params);
    }
    return rd;
}

void write_ruling_csv(const std::filesystem::path& path, const LocalFrames& frames, const RulingData& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(12);
    out << "face,rx,ry,rz,px,py,pz,w,kappa1,kappa2\n";
    for (Eigen::Index f = 0; f < data.w.size(); ++f) {
        const int fi = static_cast<int>(f);
        const Eigen::Vector3d r = frames.to_world(fi, Eigen::Vector2d(data.r.segment<2>(2 * f)));
        const Eigen::Vector3d p = frames.to_world(fi, Eigen::Vector2d(data.r_perp.segment<2>(2 * f)));
        out << f << ',' << r.x() << ',' << r.y() << ',' << r.z() << ',' << p.x() << ',' << p.y() << ',' << p.z() << ','
            << data.w(f) << ',' << data.kappa1(f) << ',' << data.kappa2(f) << '\n';
    }
}

}  // namespace pqstrip
