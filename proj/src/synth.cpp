#include "pqstrip/synth.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>

namespace pqstrip {

SurfaceKind parse_surface_kind(const std::string& name) {
    if (name == "plane") return SurfaceKind::plane;
    if (name == "cylinder") return SurfaceKind::cylinder;
    if (name == "cone") return SurfaceKind::cone;
    if (name == "clothoid") return SurfaceKind::clothoid;
    if (name == "composite") return SurfaceKind::composite;
    if (name == "creased") return SurfaceKind::creased;
    throw std::invalid_argument("unknown surface kind '" + name + "'");
}

std::string to_string(SurfaceKind kind) {
    switch (kind) {
        case SurfaceKind::plane: return "plane";
        case SurfaceKind::cylinder: return "cylinder";
        case SurfaceKind::cone: return "cone";
        case SurfaceKind::clothoid: return "clothoid";
        case SurfaceKind::composite: return "composite";
        case SurfaceKind::creased: return "creased";
    }
    return "?";
}

TriangulationStyle parse_triangulation_style(const std::string& name) {
    if (name == "regular") return TriangulationStyle::regular;
    if (name == "flipped") return TriangulationStyle::flipped;
    if (name == "randomized") return TriangulationStyle::randomized;
    throw std::invalid_argument("unknown triangulation style '" + name + "'");
}

std::string to_string(TriangulationStyle style) {
    switch (style) {
        case TriangulationStyle::regular: return "regular";
        case TriangulationStyle::flipped: return "flipped";
        case TriangulationStyle::randomized: return "randomized";
    }
    return "?";
}

namespace {

constexpr double kPi = std::numbers::pi;

struct Grid {
    std::vector<Eigen::Vector2d> uv;
    std::vector<Eigen::Vector3i> tris;
    std::vector<Eigen::Vector2d> face_uv;
};

bool flip_cell(TriangulationStyle style, std::mt19937& rng) {
    switch (style) {
        case TriangulationStyle::regular: return false;
        case TriangulationStyle::flipped: return true;
        case TriangulationStyle::randomized: return std::bernoulli_distribution(0.5)(rng);
    }
    return false;
}

// Cells are CCW in (u, v). With collapse_v0 the whole v0 row is one vertex.
Grid make_grid(int nu, int nv, double u0, double u1, double v0, double v1, bool periodic, bool collapse_v0,
               TriangulationStyle style, std::mt19937& rng) {
    Grid g;
    const int cols = periodic ? nu : nu + 1;
    auto uv_of = [&](int i, int j) {
        return Eigen::Vector2d(u0 + (u1 - u0) * i / nu, v0 + (v1 - v0) * j / nv);
    };
    auto id = [&](int i, int j) {
        const int ii = periodic ? i % nu : i;
        if (collapse_v0) return j == 0 ? 0 : 1 + ii * nv + (j - 1);
        return ii * (nv + 1) + j;
    };
    if (collapse_v0) {
        g.uv.push_back(uv_of(0, 0));
        for (int i = 0; i < cols; ++i)
            for (int j = 1; j <= nv; ++j) g.uv.push_back(uv_of(i, j));
    } else {
        for (int i = 0; i < cols; ++i)
            for (int j = 0; j <= nv; ++j) g.uv.push_back(uv_of(i, j));
    }
    auto add = [&](std::array<std::pair<int, int>, 3> c) {
        Eigen::Vector3i t(id(c[0].first, c[0].second), id(c[1].first, c[1].second), id(c[2].first, c[2].second));
        if (t(0) == t(1) || t(1) == t(2) || t(0) == t(2)) return;
        g.tris.push_back(t);
        g.face_uv.push_back((uv_of(c[0].first, c[0].second) + uv_of(c[1].first, c[1].second) +
                             uv_of(c[2].first, c[2].second)) / 3.0);
    };
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            if (!flip_cell(style, rng)) {
                add({{{i, j}, {i + 1, j}, {i + 1, j + 1}}});
                add({{{i, j}, {i + 1, j + 1}, {i, j + 1}}});
            } else {
                add({{{i, j}, {i + 1, j}, {i, j + 1}}});
                add({{{i + 1, j}, {i + 1, j + 1}, {i, j + 1}}});
            }
        }
    return g;
}

Eigen::Vector3d project_to_face(const TriMesh& mesh, int f, const Eigen::Vector3d& r) {
    const Eigen::Vector3d n = mesh.face_normal(f);
    const Eigen::Vector3d p = r - r.dot(n) * n;
    const double len = p.norm();
    return len > 1e-12 ? Eigen::Vector3d(p / len) : Eigen::Vector3d::Zero();
}

using Map3 = std::function<Eigen::Vector3d(const Eigen::Vector2d&)>;

SynthSurface finish(const Grid& g, const Map3& position, const Map3& ruling,
                    const std::function<double(const Eigen::Vector2d&)>& curvature,
                    const std::vector<VertexPair>& creases = {}) {
    Eigen::MatrixX3d V(g.uv.size(), 3);
    for (size_t i = 0; i < g.uv.size(); ++i) V.row(i) = position(g.uv[i]);
    Eigen::MatrixX3i F(g.tris.size(), 3);
    for (size_t f = 0; f < g.tris.size(); ++f) F.row(f) = g.tris[f];
    SynthSurface s;
    s.mesh = build_mesh(std::move(V), std::move(F), creases);
    s.ruling.resize(s.mesh.num_faces(), 3);
    s.curvature.resize(s.mesh.num_faces());
    for (int f = 0; f < s.mesh.num_faces(); ++f) {
        s.ruling.row(f) = project_to_face(s.mesh, f, ruling(g.face_uv[f]));
        s.curvature(f) = curvature(g.face_uv[f]);
    }
    return s;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

SynthSurface make_composite(const SynthParams& p, std::mt19937& rng) {
    const int n = p.nu, m = p.nv;
    const double L = p.length, W = p.flap_width, R = p.radius;
    const Eigen::Vector2d A(0, 0), B(L, 0), C(L / 2, L * std::sqrt(3.0) / 2);

    std::vector<Eigen::Vector2d> pts;
    std::vector<int> flap_of;  // -1 on the planar triangle
    std::vector<Eigen::Vector3i> tris;
    std::vector<int> tri_flap;

    std::vector<int> tid((n + 1) * (n + 1), -1);
    auto T = [&](int a, int b) -> int& { return tid[a * (n + 1) + b]; };
    for (int a = 0; a <= n; ++a)
        for (int b = 0; a + b <= n; ++b) {
            T(a, b) = static_cast<int>(pts.size());
            pts.push_back(A + (B - A) * a / n + (C - A) * b / n);
            flap_of.push_back(-1);
        }
    for (int a = 0; a < n; ++a)
        for (int b = 0; a + b < n; ++b) {
            tris.emplace_back(T(a, b), T(a + 1, b), T(a, b + 1));
            tri_flap.push_back(-1);
            if (a + b + 2 <= n) {
                tris.emplace_back(T(a + 1, b), T(a + 1, b + 1), T(a, b + 1));
                tri_flap.push_back(-1);
            }
        }

    const Eigen::Vector2d corners[3] = {A, B, C};
    std::vector<Eigen::Vector2d> flap_base, flap_dir, flap_out;
    for (int e = 0; e < 3; ++e) {
        const Eigen::Vector2d X = corners[e], Y = corners[(e + 1) % 3];
        const Eigen::Vector2d d = (Y - X).normalized();
        const Eigen::Vector2d out(d.y(), -d.x());
        flap_base.push_back(X);
        flap_dir.push_back(d);
        flap_out.push_back(out);
        auto edge_vertex = [&](int i) {
            if (e == 0) return T(i, 0);
            if (e == 1) return T(n - i, i);
            return T(0, n - i);
        };
        std::vector<int> id((n + 1) * (m + 1));
        for (int i = 0; i <= n; ++i) {
            id[i * (m + 1)] = edge_vertex(i);
            for (int j = 1; j <= m; ++j) {
                id[i * (m + 1) + j] = static_cast<int>(pts.size());
                pts.push_back(X + (Y - X) * i / n + out * (W * j / m));
                flap_of.push_back(e);
            }
        }
        auto V = [&](int i, int j) { return id[i * (m + 1) + j]; };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                if (!flip_cell(p.style, rng)) {
                    tris.emplace_back(V(i, j), V(i + 1, j), V(i + 1, j + 1));
                    tris.emplace_back(V(i, j), V(i + 1, j + 1), V(i, j + 1));
                } else {
                    tris.emplace_back(V(i, j), V(i + 1, j), V(i, j + 1));
                    tris.emplace_back(V(i + 1, j), V(i + 1, j + 1), V(i, j + 1));
                }
                tri_flap.push_back(e);
                tri_flap.push_back(e);
            }
    }
    for (auto& t : tris) {
        const Eigen::Vector2d a = pts[t(0)], b = pts[t(1)], c = pts[t(2)];
        const double cross = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        if (cross < 0) std::swap(t(1), t(2));
    }

    Eigen::MatrixX3d V3(pts.size(), 3);
    for (size_t i = 0; i < pts.size(); ++i) {
        const int e = flap_of[i];
        if (e < 0) {
            V3.row(i) << pts[i].x(), pts[i].y(), 0.0;
            continue;
        }
        const double t = (pts[i] - flap_base[e]).dot(flap_out[e]);
        const Eigen::Vector2d base = pts[i] - t * flap_out[e];
        const Eigen::Vector2d planar = base + R * std::sin(t / R) * flap_out[e];
        V3.row(i) << planar.x(), planar.y(), R * (1.0 - std::cos(t / R));
    }
    Eigen::MatrixX3i F(tris.size(), 3);
    for (size_t f = 0; f < tris.size(); ++f) F.row(f) = tris[f];

    SynthSurface s;
    s.mesh = build_mesh(std::move(V3), std::move(F));
    s.ruling = Eigen::MatrixX3d::Zero(s.mesh.num_faces(), 3);
    s.curvature = Eigen::VectorXd::Zero(s.mesh.num_faces());
    for (int f = 0; f < s.mesh.num_faces(); ++f) {
        const int e = tri_flap[f];
        if (e < 0) continue;
        s.ruling.row(f) = project_to_face(s.mesh, f, Eigen::Vector3d(flap_dir[e].x(), flap_dir[e].y(), 0.0));
        s.curvature(f) = 1.0 / R;
    }
    return s;
}

}  // namespace

SynthSurface generate(const SynthParams& p) {
    require(p.nu >= 1 && p.nv >= 1, "resolution must give at least 2 samples per direction");
    std::mt19937 rng(p.seed);
    const double R = p.radius;
    switch (p.kind) {
        case SurfaceKind::plane: {
            require(p.width > 0 && p.length > 0, "plane extents must be positive");
            Grid g = make_grid(p.nu, p.nv, 0.0, p.width, 0.0, p.length, false, false, p.style, rng);
            return finish(
                g, [](const Eigen::Vector2d& q) { return Eigen::Vector3d(q.x(), q.y(), 0.0); },
                [](const Eigen::Vector2d&) { return Eigen::Vector3d(0, 1, 0); },
                [](const Eigen::Vector2d&) { return 0.0; });
        }
        case SurfaceKind::cylinder: {
            require(R > 0 && p.length > 0 && p.sweep > 0 && p.sweep <= 2 * kPi, "invalid cylinder parameters");
            const bool closed = std::abs(p.sweep - 2 * kPi) < 1e-12;
            require(!closed || p.nu >= 3, "closed cylinder needs at least 3 cells around");
            Grid g = make_grid(p.nu, p.nv, 0.0, p.sweep, 0.0, p.length, closed, false, p.style, rng);
            return finish(
                g, [R](const Eigen::Vector2d& q) { return Eigen::Vector3d(R * std::cos(q.x()), R * std::sin(q.x()), q.y()); },
                [](const Eigen::Vector2d&) { return Eigen::Vector3d(0, 0, 1); },
                [R](const Eigen::Vector2d&) { return 1.0 / R; });
        }
        case SurfaceKind::cone: {
            const double a = p.half_angle;
            require(a > 0 && a < kPi / 2 && p.slant_max > 0 && p.nu >= 3, "invalid cone parameters");
            const double dmin = p.apex ? 0.0 : p.slant_min;
            require(dmin >= 0 && dmin < p.slant_max, "invalid cone slant range");
            Grid g = make_grid(p.nu, p.nv, 0.0, 2 * kPi, dmin, p.slant_max, true, p.apex, p.style, rng);
            const double sa = std::sin(a), ca = std::cos(a);
            SynthSurface s = finish(
                g,
                [=](const Eigen::Vector2d& q) {
                    return Eigen::Vector3d(q.y() * sa * std::cos(q.x()), q.y() * sa * std::sin(q.x()), q.y() * ca);
                },
                [=](const Eigen::Vector2d& q) { return Eigen::Vector3d(sa * std::cos(q.x()), sa * std::sin(q.x()), ca); },
                [=](const Eigen::Vector2d& q) { return ca / (sa * q.y()); });
            if (p.apex) s.apex_vertex = 0;
            return s;
        }
        case SurfaceKind::clothoid: {
            require(p.width > 0 && p.length > 0, "clothoid extents must be positive");
            // arc-length samples of the planar profile with kappa(t) = kappa0 + kappa_rate t
            const int sub = 64;
            std::vector<Eigen::Vector2d> profile(p.nu + 1, Eigen::Vector2d::Zero());
            auto phi = [&](double t) { return p.kappa0 * t + 0.5 * p.kappa_rate * t * t; };
            for (int i = 0; i < p.nu; ++i) {
                const double t0 = p.width * i / p.nu, h = p.width / p.nu / sub;
                Eigen::Vector2d acc = Eigen::Vector2d::Zero();
                for (int k = 0; k < sub; ++k) {
                    const double a = t0 + k * h, m = a + h / 2, b = a + h;
                    acc += h / 6.0 *
                           (Eigen::Vector2d(std::cos(phi(a)), std::sin(phi(a))) +
                            4.0 * Eigen::Vector2d(std::cos(phi(m)), std::sin(phi(m))) +
                            Eigen::Vector2d(std::cos(phi(b)), std::sin(phi(b))));
                }
                profile[i + 1] = profile[i] + acc;
            }
            Grid g = make_grid(p.nu, p.nv, 0.0, p.width, 0.0, p.length, false, false, p.style, rng);
            const double du = p.width / p.nu;
            return finish(
                g,
                [&](const Eigen::Vector2d& q) {
                    const int i = static_cast<int>(std::lround(q.x() / du));
                    return Eigen::Vector3d(profile[i].x(), profile[i].y(), q.y());
                },
                [](const Eigen::Vector2d&) { return Eigen::Vector3d(0, 0, 1); },
                [&](const Eigen::Vector2d& q) { return std::abs(p.kappa0 + p.kappa_rate * q.x()); });
        }
        case SurfaceKind::composite:
            require(R > 0 && p.length > 0 && p.flap_width > 0, "invalid composite parameters");
            return make_composite(p, rng);
        case SurfaceKind::creased: {
            require(R > 0 && p.flap_width > 0 && p.length > 0 && p.nu >= 2 && p.nu % 2 == 0,
                    "creased surface needs an even number of cells across the fold");
            const double beta = p.fold_angle / 2;
            auto profile = [=](double t) {
                const double s = std::abs(t);
                const double x = R * (std::sin(beta + s / R) - std::sin(beta));
                const double y = R * (std::cos(beta) - std::cos(beta + s / R));
                return Eigen::Vector2d(t < 0 ? -x : x, y);
            };
            Grid g = make_grid(p.nu, p.nv, -p.flap_width, p.flap_width, 0.0, p.length, false, false, p.style, rng);
            std::vector<VertexPair> creases;
            const int mid = p.nu / 2;
            for (int j = 0; j < p.nv; ++j) creases.emplace_back(mid * (p.nv + 1) + j, mid * (p.nv + 1) + j + 1);
            return finish(
                g,
                [&](const Eigen::Vector2d& q) {
                    const Eigen::Vector2d c = profile(q.x());
                    return Eigen::Vector3d(c.x(), q.y(), c.y());
                },
                [](const Eigen::Vector2d&) { return Eigen::Vector3d(0, 1, 0); },
                [R](const Eigen::Vector2d&) { return 1.0 / R; }, creases);
        }
    }
    throw std::invalid_argument("unknown surface kind");
}

TriMesh perturb(const TriMesh& mesh, double amplitude, unsigned seed) {
    if (amplitude < 0) throw std::invalid_argument("perturbation amplitude must be non-negative");
    TriMesh out = mesh;
    if (amplitude == 0) return out;
    const double radius = amplitude * mesh.mean_edge_length();
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.boundary_vertex[v]) continue;
        Eigen::Vector3d d(nd(rng), nd(rng), nd(rng));
        d.normalize();
        out.V.row(v) += (radius * std::cbrt(ud(rng)) * d).transpose();
    }
    return out;
}

void write_ground_truth_csv(const std::filesystem::path& path, const SynthSurface& surface) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(12);
    out << "face,rx,ry,rz,curvature\n";
    for (int f = 0; f < surface.mesh.num_faces(); ++f)
        out << f << ',' << surface.ruling(f, 0) << ',' << surface.ruling(f, 1) << ',' << surface.ruling(f, 2) << ','
            << surface.curvature(f) << '\n';
}

}  // namespace pqstrip
