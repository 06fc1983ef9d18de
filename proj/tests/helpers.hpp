#pragma once

#include "pqstrip/curvature.hpp"
#include "pqstrip/geometry.hpp"
#include "pqstrip/mesh.hpp"
#include "pqstrip/operators.hpp"
#include "pqstrip/synth.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <string>

namespace testing {

inline std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "pqstrip_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

inline pqstrip::TriMesh single_triangle() {
    Eigen::MatrixX3d V(3, 3);
    V << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    Eigen::MatrixX3i F(1, 3);
    F << 0, 1, 2;
    return pqstrip::build_mesh(V, F);
}

inline pqstrip::TriMesh two_triangles(const std::vector<pqstrip::VertexPair>& creases = {}) {
    Eigen::MatrixX3d V(4, 3);
    V << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
    Eigen::MatrixX3i F(2, 3);
    F << 0, 1, 2, 0, 2, 3;
    return pqstrip::build_mesh(V, F, creases);
}

inline pqstrip::TriMesh tetrahedron() {
    Eigen::MatrixX3d V(4, 3);
    V << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    Eigen::MatrixX3i F(4, 3);
    F << 0, 2, 1, 0, 1, 3, 0, 3, 2, 1, 2, 3;
    return pqstrip::build_mesh(V, F);
}

/// Icosphere of the given radius, subdivided `levels` times.
inline pqstrip::TriMesh icosphere(double radius, int levels) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> P = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    std::vector<Eigen::Vector3i> T = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (auto& p : P) p.normalize();
    for (int l = 0; l < levels; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            P.push_back((P[a] + P[b]).normalized());
            return mid[key] = static_cast<int>(P.size()) - 1;
        };
        std::vector<Eigen::Vector3i> next;
        for (const auto& tri : T) {
            int a = midpoint(tri(0), tri(1)), b = midpoint(tri(1), tri(2)), c = midpoint(tri(2), tri(0));
            next.emplace_back(tri(0), a, c);
            next.emplace_back(tri(1), b, a);
            next.emplace_back(tri(2), c, b);
            next.emplace_back(a, b, c);
        }
        T = next;
    }
    Eigen::MatrixX3d V(P.size(), 3);
    for (size_t i = 0; i < P.size(); ++i) V.row(i) = radius * P[i];
    Eigen::MatrixX3i F(T.size(), 3);
    for (size_t i = 0; i < T.size(); ++i) F.row(i) = T[i];
    return pqstrip::build_mesh(V, F);
}

/// Flat disk of radius 1 in z=0 from polar rings, with a center vertex.
inline pqstrip::TriMesh flat_disk(int rings, int sectors) {
    pqstrip::SynthParams p;
    p.kind = pqstrip::SurfaceKind::cone;
    p.apex = true;
    p.half_angle = std::numbers::pi / 2 - 1e-9;
    p.slant_max = 1.0;
    p.nu = sectors;
    p.nv = rings;
    pqstrip::TriMesh m = pqstrip::generate(p).mesh;
    m.V.col(2).setZero();
    return pqstrip::build_mesh(m.V, m.F);
}

/// Random perturbation of a synthetic surface, for property tests.
inline pqstrip::TriMesh random_mesh(std::mt19937& rng, bool curved) {
    std::uniform_int_distribution<int> cells(5, 30);
    pqstrip::SynthParams p;
    p.nu = cells(rng);
    p.nv = std::max(1, std::min(cells(rng), 2000 / (2 * p.nu)));
    p.style = pqstrip::TriangulationStyle::randomized;
    p.seed = rng();
    p.kind = curved ? pqstrip::SurfaceKind::clothoid : pqstrip::SurfaceKind::plane;
    pqstrip::SynthSurface s = pqstrip::generate(p);
    pqstrip::TriMesh m = pqstrip::perturb(s.mesh, 0.1, static_cast<unsigned>(rng()));
    if (!curved) m.V.col(2).setZero();
    return m;
}

/// Mesh plus everything the field optimizer needs. Held by pointer so the
/// references taken by the optimizer stay valid.
struct FieldSetup {
    pqstrip::TriMesh mesh;
    pqstrip::LocalFrames frames;
    pqstrip::MassMatrices masses;
    pqstrip::DiscreteOperators ops;
    pqstrip::RulingData rulings;
};

inline std::unique_ptr<FieldSetup> make_setup(pqstrip::TriMesh mesh) {
    auto s = std::make_unique<FieldSetup>();
    s->mesh = std::move(mesh);
    s->frames = pqstrip::build_frames(s->mesh);
    s->masses = pqstrip::build_masses(s->mesh);
    s->ops = pqstrip::build_operators(s->mesh, s->frames, s->masses);
    s->rulings = pqstrip::estimate_rulings(s->mesh, s->frames);
    return s;
}

/// Per-face in-frame roots of a world direction field.
inline Eigen::VectorXd roots_of(const FieldSetup& s, const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& dir) {
    Eigen::VectorXd g(2 * s.mesh.num_faces());
    for (int f = 0; f < s.mesh.num_faces(); ++f) {
        const Eigen::Vector3d d = dir(s.mesh.barycenter(f));
        Eigen::Vector2d c(d.dot(s.frames.e1[f]), d.dot(s.frames.e2[f]));
        g.segment<2>(2 * f) = c.normalized();
    }
    return g;
}

}  // namespace testing
