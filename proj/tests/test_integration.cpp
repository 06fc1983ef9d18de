#include "helpers.hpp"

#include "pqstrip/integration.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

using namespace pqstrip;
using testing::FieldSetup;
using testing::make_setup;
using testing::roots_of;

namespace {

constexpr double kPi = std::numbers::pi;

SynthSurface synth(SurfaceKind kind, int nu, int nv, TriangulationStyle style = TriangulationStyle::regular) {
    SynthParams p;
    p.kind = kind;
    p.nu = nu;
    p.nv = nv;
    p.style = style;
    return generate(p);
}

/// Euler characteristic of the mesh cut open along the cut and decoupled edges.
int cut_open_euler(const TriMesh& m, const CutGraph& cut, const SeamlessField& u) {
    int extra = 0;
    for (int e = 0; e < m.num_edges(); ++e) extra += cut.cut_edge[e] || cut.decoupled_edge[e];
    return static_cast<int>(u.copy_vertex.size()) - (m.num_edges() + extra) + m.num_faces();
}

int corner_of(const TriMesh& m, int f, int v) {
    for (int c = 0; c < 3; ++c)
        if (m.F(f, c) == v) return c;
    return -1;
}

/// Largest seam violation: non-cut edges must agree, cut edges differ by an integer shift.
double seam_error(const TriMesh& m, const CutGraph& cut, const SeamlessField& u) {
    double worst = 0.0;
    for (int e = 0; e < m.num_edges(); ++e) {
        if (!u.edge_sign[e]) continue;
        const Edge& ed = m.edges[e];
        for (int v : {ed.v0, ed.v1}) {
            const double d = u.corner_u(ed.f1, corner_of(m, ed.f1, v)) - u.edge_sign[e] * u.corner_u(ed.f0, corner_of(m, ed.f0, v));
            worst = std::max(worst, cut.cut_edge[e] ? std::abs(d - std::round(d)) : std::abs(d));
            if (cut.cut_edge[e]) worst = std::max(worst, std::abs(d - u.edge_shift(e)));
        }
    }
    return worst;
}

struct Solved {
    std::unique_ptr<FieldSetup> s;
    FieldResult field;
    CutGraph cut;
};

Solved solve_field(TriMesh mesh, OptimizerConfig cfg = {}) {
    Solved out;
    out.s = make_setup(std::move(mesh));
    FieldOptimizer opt(out.s->mesh, out.s->frames, out.s->masses, out.s->ops, out.s->rulings, cfg);
    out.field = opt.optimize();
    out.cut = build_cut(out.s->mesh, out.field.raw, cfg.crease_curl);
    return out;
}

}  // namespace

// ---- cut graph -------------------------------------------------------------------

TEST_CASE("cut of a disk without singularities is empty") {
    const auto s = make_setup(synth(SurfaceKind::plane, 8, 6, TriangulationStyle::randomized).mesh);
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d&) { return Eigen::Vector3d(1, 0, 0); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    const CutGraph cut = build_cut(s->mesh, raw, false);
    CHECK(cut.edges().empty());
    CHECK(cut.num_pieces == 1);
    for (signed char c : cut.face_sign) CHECK(c == 1);
}

TEST_CASE("cut of an annulus joins the two boundary loops") {
    const auto s = make_setup(synth(SurfaceKind::cylinder, 24, 6).mesh);
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d& q) { return Eigen::Vector3d(-q.y(), q.x(), 0); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    REQUIRE(raw.singular_vertices.empty());
    const CutGraph cut = build_cut(s->mesh, raw, false);
    const auto edges = cut.edges();
    REQUIRE(!edges.empty());
    // a single path: two endpoints of degree one, both on the boundary, on different loops
    std::map<int, int> degree;
    for (int e : edges) {
        ++degree[s->mesh.edges[e].v0];
        ++degree[s->mesh.edges[e].v1];
    }
    std::vector<int> ends;
    for (const auto& [v, d] : degree) {
        CHECK(d <= 2);
        if (d == 1) ends.push_back(v);
    }
    REQUIRE(ends.size() == 2);
    CHECK(s->mesh.boundary_vertex[ends[0]]);
    CHECK(s->mesh.boundary_vertex[ends[1]]);
    CHECK(std::abs(s->mesh.V(ends[0], 2) - s->mesh.V(ends[1], 2)) > 0.5);
    const SeamlessField u = integrate_u(s->mesh, s->ops, s->masses, cut, raw, g, 1.0, {}, true);
    CHECK(cut_open_euler(s->mesh, cut, u) == 1);
}

TEST_CASE("cut of a disk with one singularity runs from it to the boundary") {
    const auto s = make_setup(testing::flat_disk(6, 16));
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d& p) {
        const double a = 0.5 * std::atan2(p.y(), p.x());
        return Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);
    });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    REQUIRE(raw.singular_vertices == std::vector<int>{0});
    const CutGraph cut = build_cut(s->mesh, raw, false);
    std::map<int, int> degree;
    for (int e : cut.edges()) {
        ++degree[s->mesh.edges[e].v0];
        ++degree[s->mesh.edges[e].v1];
    }
    CHECK(degree[0] == 1);
    int boundary_ends = 0;
    for (const auto& [v, d] : degree) {
        if (v == 0) continue;
        CHECK(d <= 2);
        if (d == 1) boundary_ends += s->mesh.boundary_vertex[v];
    }
    CHECK(boundary_ends == 1);
}

TEST_CASE("property: cut pieces are disks with singularities on the cut") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = make_setup(trial % 3 == 2 ? testing::icosphere(1.0, 1) : testing::random_mesh(rng, trial % 2));
        Eigen::VectorXcd G(s->mesh.num_faces());
        // smooth field plus noise produces a handful of singularities
        const double phase = ang(rng);
        for (int f = 0; f < G.size(); ++f) {
            const Eigen::Vector3d b = s->mesh.barycenter(f);
            G(f) = std::polar(1.0, 6 * b.x() + 4 * b.y() + phase + 0.3 * ang(rng));
        }
        const RawField raw = local_raw_representation(s->mesh, s->frames, s->ops, s->masses, G, false);
        const CutGraph cut = build_cut(s->mesh, raw, false);
        const SeamlessField u = integrate_u(s->mesh, s->ops, s->masses, cut, raw, raw.gamma, 1.0, {}, true);
        CHECK(cut_open_euler(s->mesh, cut, u) == cut.num_pieces);
        std::set<int> on_cut;
        for (int e : cut.edges()) on_cut.insert({s->mesh.edges[e].v0, s->mesh.edges[e].v1});
        for (int v : raw.singular_vertices) CHECK((on_cut.count(v) || s->mesh.boundary_vertex[v]));
        // combing leaves sign flips only on cut edges
        for (int e = 0; e < s->mesh.num_edges(); ++e)
            if (u.edge_sign[e] < 0) CHECK(cut.cut_edge[e]);
    }
}

// ---- integration -----------------------------------------------------------------

TEST_CASE("constant field on a flat strip integrates exactly") {
    const auto s = make_setup(synth(SurfaceKind::plane, 10, 4, TriangulationStyle::randomized).mesh);
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d&) { return Eigen::Vector3d(1, 0, 0); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    const CutGraph cut = build_cut(s->mesh, raw, false);
    const double rho = 5.0;
    const SeamlessField u = integrate_u(s->mesh, s->ops, s->masses, cut, raw, g, rho);
    CHECK(u.residual <= 1e-10);
    const double c = u.corner_u(0, 0) - rho * s->mesh.V(s->mesh.F(0, 0), 0);
    for (int f = 0; f < s->mesh.num_faces(); ++f)
        for (int k = 0; k < 3; ++k) CHECK(std::abs(u.corner_u(f, k) - rho * s->mesh.V(s->mesh.F(f, k), 0) - c) < 1e-9);
}

TEST_CASE("axial field on a cylinder integrates to a multiple of the height") {
    SynthParams p;
    p.kind = SurfaceKind::cylinder;
    p.nu = 30;
    p.nv = 10;
    p.length = 1.0;
    const auto s = make_setup(generate(p).mesh);
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d&) { return Eigen::Vector3d(0, 0, 1); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    const CutGraph cut = build_cut(s->mesh, raw, false);
    const SeamlessField u = integrate_u(s->mesh, s->ops, s->masses, cut, raw, g, 5.0);
    CHECK(u.residual < 1e-8);
    CHECK(seam_error(s->mesh, cut, u) < 1e-6);
    const double zmin = s->mesh.V.col(2).minCoeff();
    const double c = u.corner_u(0, 0) - 5.0 * (s->mesh.V(s->mesh.F(0, 0), 2) - zmin);
    double worst = 0.0;
    for (int f = 0; f < s->mesh.num_faces(); ++f)
        for (int k = 0; k < 3; ++k)
            worst = std::max(worst, std::abs(u.corner_u(f, k) - 5.0 * (s->mesh.V(s->mesh.F(f, k), 2) - zmin) - c));
    CHECK(worst < 1e-8);
    int interior_levels = 0;
    for (double k = std::floor(u.min_value()) + 1; k < u.max_value(); k += 1.0) interior_levels += k > u.min_value();
    CHECK(interior_levels >= 4);
    CHECK(interior_levels <= 6);
}

TEST_CASE("cone density integrates to the unrolled angle") {
    SynthParams p;
    p.kind = SurfaceKind::cone;
    p.nu = 45;
    p.nv = 20;
    const auto s = make_setup(generate(p).mesh);
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d& q) { return Eigen::Vector3d(-q.y(), q.x(), 0); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    const Eigen::VectorXd gd = project_div_free(raw, g);
    CurlQpOptions qo;
    qo.scale_weights = s->masses.face;
    const CurlQpResult qp = project_curl_free(raw.C, gd, qo);
    const CutGraph cut = build_cut(s->mesh, raw, false);
    const SeamlessField u = integrate_u(s->mesh, s->ops, s->masses, cut, raw, qp.gamma, 3.0);
    CHECK(seam_error(s->mesh, cut, u) < 1e-6);

    // per-face corner differences of u against those of the azimuth
    double suv = 0, suu = 0, svv = 0;
    for (int f = 0; f < s->mesh.num_faces(); ++f) {
        const Eigen::Vector3d p0 = s->mesh.V.row(s->mesh.F(f, 0));
        const double a0 = std::atan2(p0.y(), p0.x());
        for (int k = 1; k < 3; ++k) {
            const Eigen::Vector3d pk = s->mesh.V.row(s->mesh.F(f, k));
            double da = std::atan2(pk.y(), pk.x()) - a0;
            da = std::remainder(da, 2 * kPi);
            const double du = u.corner_u(f, k) - u.corner_u(f, 0);
            suv += du * da;
            suu += du * du;
            svv += da * da;
        }
    }
    CHECK(std::abs(suv) / std::sqrt(suu * svv) >= 0.999);
}

TEST_CASE("composite: seamless, half-integer singular values, parallel gradients") {
    const Solved r = solve_field(synth(SurfaceKind::composite, 30, 10).mesh);
    const TriMesh& m = r.s->mesh;
    REQUIRE(!r.field.raw.singular_vertices.empty());
    const double rho = resolution_for_strips(m, r.s->ops, r.s->masses, r.cut, r.field.raw, r.field.gamma_c, 20);
    const SeamlessField u = integrate_u(m, r.s->ops, r.s->masses, r.cut, r.field.raw, r.field.gamma_c, rho);
    CHECK(seam_error(m, r.cut, u) < 1e-6);
    for (int c = 0; c < static_cast<int>(u.copy_vertex.size()); ++c)
        for (int v : r.field.raw.singular_vertices)
            if (u.copy_vertex[c] == v) CHECK(std::abs(u.copy_u(c) - std::floor(u.copy_u(c)) - 0.5) < 1e-6);
    for (int f = 0; f < m.num_faces(); ++f) {
        if (r.s->rulings.w(f) <= 0.4) continue;
        const Eigen::Vector2d a = u.gradient.segment<2>(2 * f), b = u.target.segment<2>(2 * f);
        CHECK(std::acos(std::min(1.0, a.dot(b) / (a.norm() * b.norm()))) <= 5.0 * kPi / 180.0);
    }
    const double levels = std::floor(u.max_value()) - std::ceil(u.min_value()) + 1;
    CHECK(levels >= 19);
    CHECK(levels <= 22);

    // transitions composed around every regular interior vertex are the identity
    for (int v = 0; v < m.num_vertices(); ++v) {
        const VertexRing& ring = m.rings[v];
        if (!ring.closed || m.boundary_vertex[v] || r.field.raw.index(v) != 0.0) continue;
        const int n = static_cast<int>(ring.faces.size());
        double val = u.corner_u(ring.faces[0], ring.corners[0]);
        for (int i = 0; i < n; ++i) {
            const int f = ring.faces[i], g = ring.faces[(i + 1) % n];
            const int e = m.FE(f, (ring.corners[i] + 2) % 3);
            const Edge& ed = m.edges[e];
            // map the value from face f to face g across e
            val = ed.f0 == f ? u.edge_sign[e] * val + u.edge_shift(e) : u.edge_sign[e] * (val - u.edge_shift(e));
            CHECK(std::abs(val - u.corner_u(g, ring.corners[(i + 1) % n])) < 1e-6);
        }
    }
}

TEST_CASE("property: doubling the resolution doubles u on singularity-free fields") {
    std::mt19937 rng(17);
    int checked = 0;
    for (int trial = 0; trial < 4; ++trial) {
        const Solved r = solve_field(testing::random_mesh(rng, true));
        if (!r.field.raw.singular_vertices.empty()) continue;
        ++checked;
        const auto& s = *r.s;
        const SeamlessField u1 = integrate_u(s.mesh, s.ops, s.masses, r.cut, r.field.raw, r.field.gamma_c, 4.0);
        const SeamlessField u2 = integrate_u(s.mesh, s.ops, s.masses, r.cut, r.field.raw, r.field.gamma_c, 8.0);
        const Eigen::MatrixX3d d = u2.corner_u - 2.0 * u1.corner_u;
        CHECK((d.array() - d(0, 0)).abs().maxCoeff() < 1e-8);
    }
    CHECK(checked > 0);
}

TEST_CASE("crease handling follows the sync flag") {
    SynthParams p;
    p.kind = SurfaceKind::creased;
    p.nu = 12;
    p.nv = 6;
    const TriMesh m = generate(p).mesh;
    REQUIRE(!m.crease_edge_list().empty());

    const Solved off = solve_field(m);
    CHECK(off.cut.num_pieces == 2);
    const auto& so = *off.s;
    const SeamlessField uo = integrate_u(so.mesh, so.ops, so.masses, off.cut, off.field.raw, off.field.gamma_c, 5.0);
    for (int e : so.mesh.crease_edge_list()) CHECK(uo.edge_sign[e] == 0);

    OptimizerConfig cfg;
    cfg.crease_curl = true;
    const Solved on = solve_field(m, cfg);
    CHECK(on.cut.num_pieces == 1);
    const auto& sn = *on.s;
    const SeamlessField un = integrate_u(sn.mesh, sn.ops, sn.masses, on.cut, on.field.raw, on.field.gamma_c, 5.0);
    CHECK(seam_error(sn.mesh, on.cut, un) < 1e-6);
    for (int e : sn.mesh.crease_edge_list()) {
        CHECK(un.edge_sign[e] != 0);
        if (on.cut.cut_edge[e]) continue;
        const Edge& ed = sn.mesh.edges[e];
        for (int v : {ed.v0, ed.v1})
            CHECK(un.corner_u(ed.f0, corner_of(sn.mesh, ed.f0, v)) == un.corner_u(ed.f1, corner_of(sn.mesh, ed.f1, v)));
    }
}

TEST_CASE("integration input validation and export") {
    const auto s = make_setup(testing::two_triangles());
    const Eigen::VectorXd g = roots_of(*s, [](const Eigen::Vector3d&) { return Eigen::Vector3d(1, 0, 0); });
    const RawField raw = raw_representation_from_roots(s->mesh, s->frames, s->ops, s->masses, g, false);
    const CutGraph cut = build_cut(s->mesh, raw, false);
    CHECK_THROWS_AS(integrate_u(s->mesh, s->ops, s->masses, cut, raw, g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(integrate_u(s->mesh, s->ops, s->masses, cut, raw, Eigen::VectorXd(2), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(resolution_for_strips(s->mesh, s->ops, s->masses, cut, raw, g, 0), std::invalid_argument);

    const SeamlessField u = integrate_u(s->mesh, s->ops, s->masses, cut, raw, g, 2.0);
    const auto path = testing::temp_dir() / "u.obj";
    write_u_obj(path, s->mesh, u);
    std::ifstream in(path);
    int vt = 0, fc = 0;
    for (std::string line; std::getline(in, line);) {
        vt += line.rfind("vt ", 0) == 0;
        if (line.rfind("f ", 0) == 0) {
            ++fc;
            CHECK(line.find('/') != std::string::npos);
        }
    }
    CHECK(vt == 6);
    CHECK(fc == 2);
}
