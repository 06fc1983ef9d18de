#include "helpers.hpp"

#include "pqstrip/curl_qp.hpp"
#include "pqstrip/field.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

using namespace pqstrip;
using testing::FieldSetup;
using testing::make_setup;
using testing::roots_of;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXcd square(const Eigen::VectorXd& roots) {
    Eigen::VectorXcd G(roots.size() / 2);
    for (Eigen::Index f = 0; f < G.size(); ++f) {
        const cplx z(roots(2 * f), roots(2 * f + 1));
        G(f) = z * z;
    }
    return G;
}

Eigen::VectorXcd random_unit_power(int nf, std::mt19937& rng) {
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    Eigen::VectorXcd G(nf);
    for (int f = 0; f < nf; ++f) G(f) = std::polar(1.0, ang(rng));
    return G;
}

int interior_non_crease(const TriMesh& m) {
    int n = 0;
    for (int v = 0; v < m.num_vertices(); ++v) n += !m.boundary_vertex[v] && !m.crease_vertex[v];
    return n;
}

SynthSurface synth(SurfaceKind kind, int nu, int nv, TriangulationStyle style = TriangulationStyle::regular) {
    SynthParams p;
    p.kind = kind;
    p.nu = nu;
    p.nv = nv;
    p.style = style;
    return generate(p);
}

}  // namespace

// ---- implicit alignment --------------------------------------------------------

TEST_CASE("implicit_align closed form") {
    Eigen::VectorXcd prev(1), R(1);
    prev << 1.0;
    R << cplx(0, 1);
    Eigen::VectorXd w(1);
    w << 0.5;
    const Eigen::VectorXcd Ga = implicit_align(prev, w, R, 0.1, 0.5);
    CHECK(Ga(0).real() == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
    CHECK(Ga(0).imag() == doctest::Approx(0.1 / 1.1).epsilon(1e-12));
    CHECK(Ga(0).real() == doctest::Approx(0.9091).epsilon(1e-4));
    CHECK(Ga(0).imag() == doctest::Approx(0.0909).epsilon(1e-3));
}

TEST_CASE("implicit_align identities") {
    std::mt19937 rng(3);
    const int n = 50;
    const Eigen::VectorXcd prev = random_unit_power(n, rng), R = random_unit_power(n, rng);
    Eigen::VectorXd w = Eigen::VectorXd::Random(n).cwiseAbs();
    w.head(10).setZero();
    const double mu = lowest_nonzero_weight(w, 1e-8);
    const Eigen::VectorXcd Ga = implicit_align(prev, w, R, 0.1, mu);
    for (int f = 0; f < 10; ++f) CHECK(Ga(f) == prev(f));
    CHECK((implicit_align(R, w, R, 0.1, mu) - R).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(implicit_align(prev, Eigen::VectorXd::Zero(n), R, 0.1, 0.0) == prev);
    // alignment energy never increases
    Eigen::VectorXd mass = Eigen::VectorXd::Ones(n);
    CHECK(alignment_energy(Ga, w, mass, R) <= alignment_energy(prev, w, mass, R));
}

TEST_CASE("lowest_nonzero_weight") {
    Eigen::VectorXd w(5);
    w << 0.0, 1e-9, 0.3, 0.05, 0.7;
    CHECK(lowest_nonzero_weight(w, 1e-8) == 0.05);
    CHECK(lowest_nonzero_weight(Eigen::VectorXd::Zero(4), 1e-8) == 0.0);
}

// ---- implicit smoothing --------------------------------------------------------

TEST_CASE("implicit_smooth two-face dense oracle") {
    const auto s = make_setup(testing::two_triangles());
    const TriMesh& m = s->mesh;
    const Eigen::VectorXd w = Eigen::VectorXd::Zero(2);
    const SpMatC L2 = smoothness_matrix(m, s->frames, s->masses, w);

    // independent assembly of the single interior edge term
    int e = -1;
    for (int i = 0; i < m.num_edges(); ++i)
        if (!m.edges[i].is_boundary()) e = i;
    REQUIRE(e >= 0);
    const Edge& ed = m.edges[e];
    const Eigen::Vector3d ev = m.V.row(ed.v1) - m.V.row(ed.v0);
    const cplx a = std::conj(std::pow(s->frames.to_complex(ed.f0, ev.normalized()), 2));
    const cplx b = std::conj(std::pow(s->frames.to_complex(ed.f1, ev.normalized()), 2));
    const double c = s->masses.edge(e);
    Eigen::Matrix2cd L;
    L(ed.f0, ed.f0) = c * std::norm(a);
    L(ed.f1, ed.f1) = c * std::norm(b);
    L(ed.f0, ed.f1) = -c * std::conj(a) * b;
    L(ed.f1, ed.f0) = -c * std::conj(b) * a;
    CHECK((Eigen::Matrix2cd(L2) - L).cwiseAbs().maxCoeff() < 1e-12);

    // Ga transported into a common frame reads (1, -1)
    Eigen::VectorXcd Ga(2);
    Ga(ed.f0) = 1.0 / a;
    Ga(ed.f1) = -1.0 / b;
    const double omega = 0.3, mu = 0.7;
    const Eigen::Vector2d M = s->masses.face;
    Eigen::Matrix2cd A = L * (omega / mu);
    A.diagonal() += M.cast<cplx>();
    const Eigen::Vector2cd expect = A.fullPivLu().solve(M.cast<cplx>().cwiseProduct(Ga));
    const Eigen::VectorXcd Gs = implicit_smooth(L2, s->masses.face, Ga, omega, mu);
    CHECK((Gs - expect).cwiseAbs().maxCoeff() < 1e-12);

    const cplx x0 = Gs(ed.f0) * a, x1 = Gs(ed.f1) * b;
    CHECK(x0.real() < 1.0);
    CHECK(x1.real() > -1.0);
    CHECK(std::abs(x0 - x1) < 2.0);
}

TEST_CASE("implicit_smooth limits and fixed points") {
    const auto s = make_setup(testing::flat_disk(5, 12));
    const int nf = s->mesh.num_faces();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(nf);
    const SpMatC L2 = smoothness_matrix(s->mesh, s->frames, s->masses, w);

    // constant world direction is a fixed point
    const Eigen::VectorXcd G = square(roots_of(*s, [](const Eigen::Vector3d&) { return Eigen::Vector3d(1, 2, 0); }));
    CHECK((L2 * G).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((implicit_smooth(L2, s->masses.face, G, 0.5, 1e-3) - G).cwiseAbs().maxCoeff() < 1e-10);

    std::mt19937 rng(5);
    const Eigen::VectorXcd Ga = random_unit_power(nf, rng);
    CHECK((implicit_smooth(L2, s->masses.face, Ga, 1e-14, 1.0) - Ga).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("property: smoothing never increases the smoothness energy") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        const auto s = make_setup(testing::random_mesh(rng, trial % 2 == 0));
        const SpMatC L2 = smoothness_matrix(s->mesh, s->frames, s->masses, s->rulings.w);
        const Eigen::VectorXcd Ga = random_unit_power(s->mesh.num_faces(), rng);
        for (double t : {1e-3, 0.1, 10.0}) {
            const Eigen::VectorXcd Gs = implicit_smooth(L2, s->masses.face, Ga, t, 1.0);
            CHECK(smoothness_energy(L2, Gs) <= smoothness_energy(L2, Ga) * (1 + 1e-12));
        }
    }
}

TEST_CASE("smoothness matrix is Hermitian positive semidefinite") {
    std::mt19937 rng(12);
    const auto s = make_setup(testing::random_mesh(rng, true));
    const SpMatC L2 = smoothness_matrix(s->mesh, s->frames, s->masses, s->rulings.w);
    const SpMatC diff = L2 - SpMatC(L2.adjoint());
    CHECK(diff.norm() < 1e-12 * L2.norm());
    for (int k = 0; k < 5; ++k) CHECK(smoothness_energy(L2, random_unit_power(s->mesh.num_faces(), rng)) >= 0.0);
}

// ---- normalization and roots ---------------------------------------------------

TEST_CASE("normalize_field") {
    Eigen::VectorXcd G(4), fb(4);
    G << 2.0, cplx(0, 0.3), std::polar(1.0, 0.7), 0.0;
    fb << 1.0, 1.0, 1.0, cplx(0, 2);
    int replaced = -1;
    const Eigen::VectorXcd U = normalize_field(G, fb, &replaced);
    CHECK(std::abs(U(0) - cplx(1, 0)) < 1e-15);
    CHECK(std::abs(U(1) - cplx(0, 1)) < 1e-15);
    CHECK(std::abs(U(2) - G(2)) < 1e-15);
    CHECK(std::abs(U(3) - cplx(0, 1)) < 1e-15);
    CHECK(replaced == 1);
}

TEST_CASE("principal_root branch") {
    CHECK(std::abs(principal_root(1.0) - cplx(1, 0)) < 1e-15);
    CHECK(std::abs(principal_root(-1.0) - cplx(0, 1)) < 1e-15);
    CHECK(std::abs(principal_root(cplx(-1, -0.0)) - cplx(0, 1)) < 1e-15);
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const cplx z = std::polar(1.0, ang(rng));
        const cplx r = principal_root(z);
        CHECK(std::abs(r * r - z) < 1e-14);
        CHECK(std::arg(r) > -kPi / 2);
        CHECK(std::arg(r) <= kPi / 2 + 1e-15);
    }
}

// ---- raw representation --------------------------------------------------------

TEST_CASE("raw representation of a combable field") {
    const auto s = make_setup(testing::flat_disk(5, 12));
    const TriMesh& m = s->mesh;
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d&) { return Eigen::Vector3d(1, 0.3, 0); });
    const RawField raw = raw_representation_from_roots(m, s->frames, s->ops, s->masses, g, false);
    for (int e = 0; e < m.num_edges(); ++e) CHECK(raw.matching[e] == (m.edges[e].is_boundary() ? 0 : 1));
    CHECK(raw.singular_vertices.empty());
    CHECK(static_cast<int>(raw.working_vertices.size()) == interior_non_crease(m));
    CHECK((raw.D * g).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((raw.C * g).cwiseAbs().maxCoeff() < 1e-12);

    // from the power field the branch choice is arbitrary but the result is not
    const RawField viaG = local_raw_representation(m, s->frames, s->ops, s->masses, square(g), false);
    CHECK(viaG.singular_vertices.empty());
    CHECK(viaG.working_vertices == raw.working_vertices);
    CHECK((viaG.D * viaG.gamma).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((viaG.C * viaG.gamma).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fan fields have the analytic index at the center") {
    const auto s = make_setup(testing::flat_disk(6, 16));
    const TriMesh& m = s->mesh;
    REQUIRE(m.V.row(0).norm() < 1e-12);
    for (int k : {1, -1, 2, -2}) {
        CAPTURE(k);
        const Eigen::VectorXd g = roots_of(*s, [k](const Eigen::Vector3d& p) {
            const double a = 0.5 * k * std::atan2(p.y(), p.x());
            return Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);
        });
        const RawField raw = raw_representation_from_roots(m, s->frames, s->ops, s->masses, g, false);
        REQUIRE(raw.singular_vertices.size() == 1);
        CHECK(raw.singular_vertices[0] == 0);
        CHECK(raw.index(0) == 0.5 * k);
        CHECK(std::find(raw.working_vertices.begin(), raw.working_vertices.end(), 0) == raw.working_vertices.end());
    }
}

TEST_CASE("field on a cone apex has index one") {
    SynthParams p;
    p.kind = SurfaceKind::cone;
    p.apex = true;
    p.nu = 16;
    p.nv = 6;
    const SynthSurface surf = generate(p);
    const auto s = make_setup(surf.mesh);
    for (bool radial : {true, false}) {
        const Eigen::VectorXd g = roots_of(*s, [&](const Eigen::Vector3d& q) {
            const Eigen::Vector3d c(-q.y(), q.x(), 0.0);
            return radial ? Eigen::Vector3d(q) : c;
        });
        const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
        REQUIRE(raw.singular_vertices.size() == 1);
        CHECK(raw.singular_vertices[0] == surf.apex_vertex);
        CHECK(raw.index(surf.apex_vertex) == 1.0);
    }
}

TEST_CASE("property: indices of any field on a closed surface sum to the Euler characteristic") {
    std::mt19937 rng(21);
    const auto sphere = make_setup(testing::icosphere(1.0, 2));
    const auto tet = make_setup(testing::tetrahedron());
    for (const FieldSetup* s : {sphere.get(), tet.get()}) {
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::VectorXcd G = random_unit_power(s->mesh.num_faces(), rng);
            const RawField raw = local_raw_representation(s->mesh, s->frames, s->ops, s->masses, G, false);
            CHECK(raw.index.sum() == doctest::Approx(2.0));
            for (int v = 0; v < s->mesh.num_vertices(); ++v) CHECK(2 * raw.index(v) == std::round(2 * raw.index(v)));
        }
    }
    // tangent projection of a constant vector: one +1 at each pole
    const Eigen::VectorXd g = roots_of(*sphere, [](const Eigen::Vector3d& q) {
        const Eigen::Vector3d z(0.1, 0.2, 1.0);
        return Eigen::Vector3d(z - z.dot(q.normalized()) * q.normalized());
    });
    const RawField raw = raw_representation_from_roots(sphere->mesh, sphere->frames, sphere->ops, sphere->masses, g, false);
    CHECK(raw.index.sum() == doctest::Approx(2.0));
    CHECK(raw.index.minCoeff() >= 0.0);
}

TEST_CASE("property: sign flips of the roots change nothing") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 6; ++trial) {
        const auto s = make_setup(testing::random_mesh(rng, trial % 2 == 0));
        const int nf = s->mesh.num_faces();
        const Eigen::VectorXcd G = random_unit_power(nf, rng);
        const RawField a = local_raw_representation(s->mesh, s->frames, s->ops, s->masses, G, false);
        Eigen::VectorXd flip = Eigen::VectorXd::Ones(2 * nf);
        std::bernoulli_distribution coin(0.5);
        for (int f = 0; f < nf; ++f)
            if (coin(rng)) flip.segment<2>(2 * f).setConstant(-1.0);
        const Eigen::VectorXd g2 = a.gamma.cwiseProduct(flip);
        const RawField b = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g2, false);
        CHECK(a.singular_vertices == b.singular_vertices);
        CHECK(a.working_vertices == b.working_vertices);
        CHECK((a.index - b.index).cwiseAbs().maxCoeff() == 0.0);
        CHECK(((a.D * a.gamma).cwiseAbs() - (b.D * b.gamma).cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(((a.C * a.gamma).cwiseAbs() - (b.C * b.gamma).cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::VectorXd da = project_div_free(a, a.gamma), db = project_div_free(b, b.gamma);
        CHECK((da.cwiseProduct(flip) - db).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((square(da) - square(db)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

// ---- divergence projection -----------------------------------------------------

TEST_CASE("project_div_free keeps divergence-free input") {
    const auto s = make_setup(testing::flat_disk(5, 12));
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d&) { return Eigen::Vector3d(0.3, -1, 0); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    CHECK((project_div_free(raw, g) - g).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("project_div_free keeps the axial field of a cylinder") {
    const SynthSurface surf = synth(SurfaceKind::cylinder, 30, 10);
    const auto s = make_setup(surf.mesh);
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d&) { return Eigen::Vector3d(0, 0, 1); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    REQUIRE(raw.singular_vertices.empty());
    CHECK((raw.D * g).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((project_div_free(raw, g) - g).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("project_div_free on a radial field matches a dense oracle") {
    // annulus: center removed so the radial field has no singular vertex
    SynthParams p;
    p.kind = SurfaceKind::cone;
    p.half_angle = kPi / 2 - 1e-9;
    p.slant_min = 0.3;
    p.nu = 12;
    p.nv = 4;
    TriMesh m = generate(p).mesh;
    m.V.col(2).setZero();
    const auto s = make_setup(build_mesh(m.V, m.F));
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d& q) { return q; });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    REQUIRE(raw.D.rows() > 0);
    const Eigen::VectorXd gd = project_div_free(raw, g);
    CHECK((raw.D * gd).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((gd - g).norm() > 1e-3);

    const Eigen::MatrixXd D(raw.D);
    const Eigen::VectorXd oracle = g - D.transpose() * (D * D.transpose()).ldlt().solve(D * g);
    CHECK((gd - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

// ---- curl projection -----------------------------------------------------------

namespace {

/// Dense projected-gradient solution of the density QP: gamma is eliminated
/// through the orthogonal projector onto ker C.
std::pair<Eigen::VectorXd, Eigen::VectorXd> dense_curl_qp(const SpMat& Cs, const Eigen::VectorXd& gd,
                                                          const Eigen::VectorXd& a_in, const CurlQpOptions& opt) {
    const Eigen::Index n2 = gd.size(), n = n2 / 2;
    const Eigen::MatrixXd C(Cs);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
    const double tol = 1e-10 * svd.singularValues()(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > tol;
    const Eigen::MatrixXd Z = svd.matrixV().rightCols(n2 - rank);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n2, n);
    for (Eigen::Index f = 0; f < n; ++f) B.block<2, 1>(2 * f, f) = gd.segment<2>(2 * f);
    const Eigen::MatrixXd PB = Z * (Z.transpose() * B);
    const Eigen::MatrixXd Q = B.transpose() * (B - PB);
    const Eigen::MatrixXd H = Q + opt.density_reg * Eigen::MatrixXd::Identity(n, n);
    const double L = H.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
    const Eigen::VectorXd a = a_in / a_in.sum();

    auto project = [&](const Eigen::VectorXd& y) {
        double lo = -1e6, hi = 1e6;
        Eigen::VectorXd x;
        for (int it = 0; it < 200; ++it) {
            const double t = 0.5 * (lo + hi);
            x = (y - t * a).cwiseMax(opt.s_low).cwiseMin(opt.s_high);
            (a.dot(x) > 1.0 ? lo : hi) = t;
        }
        return x;
    };
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n), yk = x;
    double tk = 1.0;
    for (int it = 0; it < 200000; ++it) {
        const Eigen::VectorXd grad = H * yk - opt.density_reg * Eigen::VectorXd::Ones(n);
        const Eigen::VectorXd xn = project(yk - grad / L);
        const double tn = 0.5 * (1 + std::sqrt(1 + 4 * tk * tk));
        yk = xn + ((tk - 1) / tn) * (xn - x);
        const double step = (xn - x).cwiseAbs().maxCoeff();
        x = xn;
        tk = tn;
        if (step < 1e-13) break;
    }
    return {x, PB * x};
}

}  // namespace

TEST_CASE("project_curl_free leaves curl-free input alone") {
    const auto s = make_setup(testing::flat_disk(5, 12));
    Eigen::VectorXd u = s->mesh.V.col(0) + 0.5 * s->mesh.V.col(1);
    const Eigen::VectorXd g = gradient(s->ops, u);
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g.normalized(), false);
    for (double scale : {1.0, 0.7}) {
        CurlQpOptions opt;
        opt.scale_weights = s->masses.face;
        const Eigen::VectorXd in = scale * g;
        const CurlQpResult r = project_curl_free(raw.C, in, opt);
        CHECK((r.gamma - in).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((r.s.array() - 1.0).abs().maxCoeff() < 1e-8);
        CHECK(r.kkt_residual <= 1e-6);
    }
}

TEST_CASE("project_curl_free recovers the analytic cone density") {
    SynthParams p;
    p.kind = SurfaceKind::cone;
    p.nu = 45;
    p.nv = 20;
    const SynthSurface surf = generate(p);
    const auto s = make_setup(surf.mesh);
    // circumferential unit field; integrable with density 1/d
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d& q) { return Eigen::Vector3d(-q.y(), q.x(), 0); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    const Eigen::VectorXd gd = project_div_free(raw, g);
    CurlQpOptions opt;
    opt.scale_weights = s->masses.face;
    const CurlQpResult r = project_curl_free(raw.C, gd, opt);
    CHECK(r.max_curl <= 1e-6);
    CHECK(r.kkt_residual <= 1e-6);

    const int nf = s->mesh.num_faces();
    Eigen::VectorXd exact(nf);
    for (int f = 0; f < nf; ++f) exact(f) = 1.0 / s->mesh.barycenter(f).norm();
    exact /= exact.dot(s->masses.face) / s->masses.face.sum();
    double worst = 0.0;
    for (int f = 0; f < nf; ++f) worst = std::max(worst, std::abs(r.s(f) / exact(f) - 1.0));
    CHECK(worst < 0.05);
}

TEST_CASE("project_curl_free matches the dense oracle") {
    std::mt19937 rng(41);
    SynthParams p;
    p.kind = SurfaceKind::clothoid;
    p.nu = 8;
    p.nv = 6;
    p.style = TriangulationStyle::randomized;
    const auto s = make_setup(generate(p).mesh);
    const int nf = s->mesh.num_faces();
    REQUIRE(nf <= 200);
    int cases_with_bounds = 0;
    for (int trial = 0; trial < 4; ++trial) {
        // smooth field plus noise so that some densities hit their bounds
        std::normal_distribution<double> noise(0.0, 0.25 * (trial + 1));
        Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d& q) { return Eigen::Vector3d(1, q.x(), q.z()); });
        for (int i = 0; i < g.size(); ++i) g(i) += noise(rng);
        for (int f = 0; f < nf; ++f) g.segment<2>(2 * f).normalize();
        const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
        const Eigen::VectorXd gd = project_div_free(raw, g);
        CurlQpOptions opt;
        opt.scale_weights = s->masses.face;
        const CurlQpResult r = project_curl_free(raw.C, gd, opt);
        const auto [s_ref, g_ref] = dense_curl_qp(raw.C, gd, s->masses.face, opt);
        CHECK((r.s - s_ref).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((r.gamma - g_ref).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(r.kkt_residual <= 1e-6);
        CHECK(r.max_curl <= 1e-6);
        CHECK(r.s.minCoeff() >= opt.s_low - 1e-12);
        CHECK(r.s.maxCoeff() <= opt.s_high + 1e-12);
        cases_with_bounds += std::count_if(r.active.begin(), r.active.end(), [](signed char c) { return c != 0; }) > 0;

        // warm start reaches the same point
        const CurlQpResult w = project_curl_free(raw.C, gd, opt, &r.active);
        CHECK(w.iterations == 1);
        CHECK((w.s - r.s).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(cases_with_bounds > 0);
}

TEST_CASE("project_curl_free rejects bad options") {
    SpMat C(1, 2);
    Eigen::VectorXd g = Eigen::VectorXd::Ones(2);
    CurlQpOptions opt;
    opt.s_low = 1.2;
    CHECK_THROWS_AS(project_curl_free(C, g, opt), std::invalid_argument);
    opt = {};
    opt.density_reg = 0.0;
    CHECK_THROWS_AS(project_curl_free(C, g, opt), std::invalid_argument);
    CHECK_THROWS_AS(project_curl_free(SpMat(1, 4), g, {}), std::invalid_argument);
}

// ---- the optimizer -------------------------------------------------------------

namespace {

void check_iteration_invariants(const FieldResult& r, const OptimizerConfig& cfg) {
    for (const IterationRecord& rec : r.log) {
        CAPTURE(rec.iteration);
        CHECK(rec.E_a_aligned <= rec.E_a_before * (1 + 1e-12) + 1e-15);
        CHECK(rec.E_s_smoothed <= rec.E_s_aligned * (1 + 1e-9) + 1e-15);
        CHECK(rec.max_div <= 1e-8);
        CHECK(rec.max_curl <= 1e-6);
        CHECK(rec.s_min >= cfg.s_low - 1e-9);
        CHECK(rec.s_max <= cfg.s_high + 1e-9);
        CHECK(rec.qp_kkt <= cfg.qp_tolerance);
    }
}

double mean_angular_error(const FieldSetup& s, const SynthSurface& surf, const FieldResult& r) {
    double sum = 0.0, area = 0.0;
    for (int f = 0; f < s.mesh.num_faces(); ++f) {
        const Eigen::Vector3d gt = surf.ruling.row(f);
        if (gt.norm() < 0.5) continue;
        const Eigen::Vector3d g = s.frames.to_world(f, Eigen::Vector2d(r.raw.gamma.segment<2>(2 * f)));
        const Eigen::Vector3d level = s.frames.normal[f].cross(g).normalized();
        const double a = std::acos(std::min(1.0, std::abs(level.dot(gt.normalized()))));
        sum += a * s.masses.face(f);
        area += s.masses.face(f);
    }
    return sum / area * 180.0 / kPi;
}

}  // namespace

TEST_CASE("optimizer on a cylinder") {
    const SynthSurface surf = synth(SurfaceKind::cylinder, 45, 20);
    const auto s = make_setup(surf.mesh);
    FieldOptimizer opt(s->mesh, s->frames, s->masses, s->ops, s->rulings);
    CHECK((opt.init_field().cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
    const FieldResult r = opt.optimize();
    CHECK(r.converged());
    CHECK(r.iterations <= 50);
    CHECK(r.raw.singular_vertices.empty());
    CHECK(mean_angular_error(*s, surf, r) < 2.0);
    check_iteration_invariants(r, opt.config());
}

TEST_CASE("optimizer on a flat rectangle") {
    const SynthSurface surf = synth(SurfaceKind::plane, 20, 20, TriangulationStyle::randomized);
    const auto s = make_setup(surf.mesh);
    FieldOptimizer opt(s->mesh, s->frames, s->masses, s->ops, s->rulings);
    CHECK(opt.mu_a() == 0.0);
    const FieldResult r = opt.optimize();
    CHECK(r.converged());
    for (const IterationRecord& rec : r.log) CHECK(rec.E_a == 0.0);
    CHECK(r.raw.index.sum() == 0.0);
    check_iteration_invariants(r, opt.config());
}

TEST_CASE("optimizer places composite singularities in the planar region") {
    const SynthSurface surf = synth(SurfaceKind::composite, 30, 10);
    const auto s = make_setup(surf.mesh);
    FieldOptimizer opt(s->mesh, s->frames, s->masses, s->ops, s->rulings);
    const FieldResult r = opt.optimize();
    CHECK(r.converged());
    CHECK(r.iterations <= 60);
    REQUIRE(!r.raw.singular_vertices.empty());
    for (int v : r.raw.singular_vertices)
        for (int f : s->mesh.rings[v].faces) CHECK(s->rulings.w(f) < 0.1);
    check_iteration_invariants(r, opt.config());
}

TEST_CASE("optimizer is deterministic and reports the stop reason") {
    const SynthSurface surf = synth(SurfaceKind::clothoid, 20, 8, TriangulationStyle::randomized);
    const auto s = make_setup(surf.mesh);
    OptimizerConfig cfg;
    cfg.max_iterations = 4;
    cfg.tolerance = 1e-12;
    FieldOptimizer a(s->mesh, s->frames, s->masses, s->ops, s->rulings, cfg);
    FieldOptimizer b(s->mesh, s->frames, s->masses, s->ops, s->rulings, cfg);
    int calls = 0;
    const FieldResult ra = a.optimize([&](const IterationRecord&, const FieldResult&) { ++calls; });
    const FieldResult rb = b.optimize();
    CHECK(calls == 4);
    CHECK(ra.stop == StopReason::max_iterations);
    CHECK(!ra.converged());
    REQUIRE(ra.log.size() == rb.log.size());
    for (size_t i = 0; i < ra.log.size(); ++i) {
        CHECK(ra.log[i].max_delta == rb.log[i].max_delta);
        CHECK(ra.log[i].E_a == rb.log[i].E_a);
        CHECK(ra.log[i].E_s == rb.log[i].E_s);
        CHECK(ra.log[i].max_curl == rb.log[i].max_curl);
    }
    CHECK(ra.Gamma == rb.Gamma);
    // the returned iterate is the best one
    double best = ra.log[0].max_delta;
    for (const auto& rec : ra.log) best = std::min(best, rec.max_delta);
    CHECK(ra.log[ra.best_iteration - 1].max_delta == best);
    CHECK(to_string(StopReason::oscillating) == "oscillating");
}

TEST_CASE("iteration log and field export") {
    const SynthSurface surf = synth(SurfaceKind::cylinder, 12, 4);
    const auto s = make_setup(surf.mesh);
    FieldOptimizer opt(s->mesh, s->frames, s->masses, s->ops, s->rulings);
    const FieldResult r = opt.optimize();
    const auto dir = testing::temp_dir();
    write_iteration_log(dir / "log.csv", r.log);
    write_field_csv(dir / "field.csv", s->frames, r);
    write_singularities_csv(dir / "sing.csv", s->mesh, r.raw);
    std::ifstream in(dir / "log.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("iteration,max_delta,E_a,E_s,E_d,singularities,max_div,max_curl", 0) == 0);
    int rows = 0;
    for (std::string line; std::getline(in, line);) rows += !line.empty();
    CHECK(rows == static_cast<int>(r.log.size()));
    std::ifstream fin(dir / "field.csv");
    rows = -1;
    for (std::string line; std::getline(fin, line);) rows += !line.empty();
    CHECK(rows == s->mesh.num_faces());
}
