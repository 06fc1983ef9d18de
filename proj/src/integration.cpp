#include "pqstrip/integration.hpp"

#include "pqstrip/log.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <queue>

namespace pqstrip {

std::vector<int> CutGraph::edges() const {
    std::vector<int> out;
    for (int e = 0; e < static_cast<int>(cut_edge.size()); ++e)
        if (cut_edge[e]) out.push_back(e);
    return out;
}

CutGraph build_cut(const TriMesh& mesh, const RawField& raw, bool sync_creases) {
    const int nf = mesh.num_faces(), ne = mesh.num_edges(), nv = mesh.num_vertices();
    CutGraph cut;
    cut.cut_edge.assign(ne, 0);
    cut.decoupled_edge.assign(ne, 0);
    cut.face_sign.assign(nf, 0);
    cut.piece.assign(nf, -1);
    for (int e = 0; e < ne; ++e) cut.decoupled_edge[e] = !sync_creases && mesh.crease_edge[e] && !mesh.edges[e].is_boundary();

    std::vector<char> tree(ne, 0);
    for (int root = 0; root < nf; ++root) {
        if (cut.piece[root] >= 0) continue;
        const int id = cut.num_pieces++;
        cut.piece[root] = id;
        cut.face_sign[root] = 1;
        std::queue<int> q;
        q.push(root);
        while (!q.empty()) {
            const int f = q.front();
            q.pop();
            for (int k = 0; k < 3; ++k) {
                const int e = mesh.FE(f, k);
                const Edge& ed = mesh.edges[e];
                if (ed.is_boundary() || cut.decoupled_edge[e]) continue;
                const int g = ed.f0 == f ? ed.f1 : ed.f0;
                if (cut.piece[g] >= 0) continue;
                cut.piece[g] = id;
                cut.face_sign[g] = static_cast<signed char>(cut.face_sign[f] * raw.matching[e]);
                tree[e] = 1;
                q.push(g);
            }
        }
    }

    std::vector<char> anchor(nv, 0);
    for (int v = 0; v < nv; ++v) anchor[v] = mesh.boundary_vertex[v];
    for (int e = 0; e < ne; ++e)
        if (cut.decoupled_edge[e]) anchor[mesh.edges[e].v0] = anchor[mesh.edges[e].v1] = 1;
    for (int v : raw.singular_vertices) anchor[v] = 1;

    std::vector<std::vector<int>> incident(nv);
    std::vector<int> degree(nv, 0);
    for (int e = 0; e < ne; ++e) {
        const Edge& ed = mesh.edges[e];
        if (ed.is_boundary() || cut.decoupled_edge[e] || tree[e]) continue;
        cut.cut_edge[e] = 1;
        for (int v : {ed.v0, ed.v1}) {
            incident[v].push_back(e);
            ++degree[v];
        }
    }
    std::vector<int> stack;
    for (int v = 0; v < nv; ++v)
        if (degree[v] == 1 && !anchor[v]) stack.push_back(v);
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (degree[v] != 1 || anchor[v]) continue;
        for (int e : incident[v]) {
            if (!cut.cut_edge[e]) continue;
            cut.cut_edge[e] = 0;
            --degree[v];
            const int o = mesh.edges[e].v0 == v ? mesh.edges[e].v1 : mesh.edges[e].v0;
            if (--degree[o] == 1 && !anchor[o]) stack.push_back(o);
            break;
        }
    }
    return cut;
}

namespace {

/// Affine expression over integer variables.
struct Affine {
    double c = 0.0;
    std::map<int, double> t;

    Affine& add(const Affine& o, double s) {
        c += s * o.c;
        for (const auto& [j, a] : o.t) {
            const double v = (t[j] += s * a);
            if (std::abs(v) < 1e-14) t.erase(j);
        }
        return *this;
    }
    Affine scaled(double s) const {
        Affine r;
        return r.add(*this, s);
    }
    static Affine var(int j) {
        Affine r;
        r.t[j] = 1.0;
        return r;
    }
};

/// Copies related by u_x = a u_parent + b; roots are either free or fixed
/// to an expression over the integer variables.
class SeamSystem {
public:
    explicit SeamSystem(int copies) : parent_(copies), sign_(copies, 1), offset_(copies), fixed_(copies) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int new_integer() {
        subst_.emplace_back();
        return static_cast<int>(subst_.size()) - 1;
    }
    int num_integers() const { return static_cast<int>(subst_.size()); }
    bool eliminated(int j) const { return subst_[j].has_value(); }

    /// u_x = sigma * u_y + e, or u_x = e when y < 0.
    void relate(int x, int sigma, int y, const Affine& e) {
        auto [rx, ax, bx] = find(x);
        Affine rhs = e;
        int ry = -1, ay = 0;
        if (y >= 0) {
            auto [r, a, b] = find(y);
            rhs.add(b, sigma);
            if (fixed_[r]) {
                rhs.add(*fixed_[r], sigma * a);
            } else {
                ry = r;
                ay = sigma * a;
            }
        }
        // ax U_rx + bx = ay U_ry + rhs
        Affine lhs_const = bx;
        if (fixed_[rx]) {
            lhs_const.add(*fixed_[rx], ax);
            Affine r = rhs;
            r.add(lhs_const, -1.0);  // ay U_ry + r = 0
            if (ry < 0)
                relation(r);
            else
                fixed_[ry] = r.scaled(-ay);
            return;
        }
        Affine r = rhs;
        r.add(lhs_const, -1.0);  // ax U_rx = ay U_ry + r
        if (ry < 0) {
            fixed_[rx] = r.scaled(ax);
        } else if (ry != rx) {
            parent_[rx] = ry;
            sign_[rx] = ax * ay;
            offset_[rx] = r.scaled(ax);
        } else if (ax == ay) {
            relation(r);
        } else {
            fixed_[rx] = r.scaled(1.0 / (ax - ay));
        }
    }

    /// u_x = a U_root + b with b over integers; root = -1 when fixed.
    std::tuple<int, int, Affine> resolve(int x) {
        auto [r, a, b] = find(x);
        if (fixed_[r]) {
            b.add(*fixed_[r], a);
            return {-1, 0, expand(b)};
        }
        return {r, a, expand(b)};
    }

    Affine expand(Affine e) const {
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& [j, a] : e.t) {
                if (!subst_[j]) continue;
                const double coef = a;
                e.t.erase(j);
                e.add(*subst_[j], coef);
                changed = true;
                break;
            }
        }
        return e;
    }

private:
    std::tuple<int, int, Affine> find(int x) {
        std::vector<int> path;
        int r = x;
        while (parent_[r] != r) {
            path.push_back(r);
            r = parent_[r];
        }
        // compress from the node nearest to the root outwards
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            const int p = parent_[*it];
            if (p == r) continue;
            Affine o = offset_[*it];
            o.add(offset_[p], sign_[*it]);
            sign_[*it] *= sign_[p];
            offset_[*it] = std::move(o);
            parent_[*it] = r;
        }
        if (x == r) return {r, 1, Affine{}};
        return {r, sign_[x], offset_[x]};
    }

    void relation(Affine r) {
        r = expand(r);
        if (r.t.empty()) {
            if (std::abs(r.c) > 1e-9)
                log_warn("integration: inconsistent seam relation (offset " + std::to_string(r.c) + "), ignored");
            return;
        }
        // prefer a unit coefficient so the eliminated variable stays integral
        int pick = -1;
        double best = 0.0;
        for (const auto& [j, a] : r.t) {
            const double score = std::abs(std::abs(a) - 1.0) < 1e-12 ? 1e9 + j : std::abs(a);
            if (score > best) {
                best = score;
                pick = j;
            }
        }
        const double a = r.t[pick];
        r.t.erase(pick);
        subst_[pick] = r.scaled(-1.0 / a);
    }

    std::vector<int> parent_;
    std::vector<int> sign_;
    std::vector<Affine> offset_;
    std::vector<std::optional<Affine>> fixed_;
    std::vector<std::optional<Affine>> subst_;
};

struct CopyLayout {
    Eigen::MatrixX3i corner_copy;
    std::vector<int> copy_vertex;
};

CopyLayout vertex_copies(const TriMesh& mesh, const CutGraph& cut) {
    CopyLayout out;
    out.corner_copy = Eigen::MatrixX3i::Constant(mesh.num_faces(), 3, -1);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const VertexRing& ring = mesh.rings[v];
        const int n = static_cast<int>(ring.faces.size());
        if (n == 0) continue;
        auto seam_after = [&](int i) {
            const int e = mesh.FE(ring.faces[i], (ring.corners[i] + 2) % 3);
            return cut.cut_edge[e] || cut.decoupled_edge[e] || mesh.edges[e].is_boundary();
        };
        int start = 0;
        if (ring.closed) {
            // begin right after a seam so that groups do not wrap
            for (int i = 0; i < n; ++i)
                if (seam_after(i)) {
                    start = (i + 1) % n;
                    break;
                }
        }
        int copy = static_cast<int>(out.copy_vertex.size());
        out.copy_vertex.push_back(v);
        for (int k = 0; k < n; ++k) {
            const int i = (start + k) % n;
            out.corner_copy(ring.faces[i], ring.corners[i]) = copy;
            if (k + 1 < n && seam_after(i)) {
                copy = static_cast<int>(out.copy_vertex.size());
                out.copy_vertex.push_back(v);
            }
        }
    }
    return out;
}

int corner_of(const TriMesh& mesh, int f, int v) {
    for (int c = 0; c < 3; ++c)
        if (mesh.F(f, c) == v) return c;
    return -1;
}

}  // namespace

SeamlessField integrate_u(const TriMesh& mesh, const DiscreteOperators& ops, const MassMatrices& masses,
                          const CutGraph& cut, const RawField& raw, const Eigen::VectorXd& gamma_c, double rho,
                          const IntegrationOptions& options, bool relaxed) {
    const int nf = mesh.num_faces(), ne = mesh.num_edges();
    if (gamma_c.size() != 2 * nf) throw std::invalid_argument("field size does not match the mesh");
    if (!(rho > 0)) throw std::invalid_argument("resolution must be positive");

    const CopyLayout layout = vertex_copies(mesh, cut);
    const int nc = static_cast<int>(layout.copy_vertex.size());
    SeamSystem sys(nc);

    // half-integer values at singular vertices
    std::vector<char> singular(mesh.num_vertices(), 0);
    for (int v : raw.singular_vertices) singular[v] = 1;
    for (int c = 0; c < nc; ++c)
        if (singular[layout.copy_vertex[c]]) {
            Affine e = Affine::var(sys.new_integer());
            e.c = 0.5;
            sys.relate(c, 0, -1, e);
        }

    std::vector<signed char> edge_sign(ne, 0);
    for (int e = 0; e < ne; ++e) {
        const Edge& ed = mesh.edges[e];
        if (ed.is_boundary() || cut.decoupled_edge[e]) continue;
        edge_sign[e] = static_cast<signed char>(cut.face_sign[ed.f0] * raw.matching[e] * cut.face_sign[ed.f1]);
        if (!cut.cut_edge[e]) continue;
        const Affine t = Affine::var(sys.new_integer());
        for (int v : {ed.v0, ed.v1}) {
            const int a = layout.corner_copy(ed.f0, corner_of(mesh, ed.f0, v));
            const int b = layout.corner_copy(ed.f1, corner_of(mesh, ed.f1, v));
            sys.relate(b, edge_sign[e], a, t);
        }
    }

    // u = P z + q over free roots and free integers
    std::vector<std::tuple<int, int, Affine>> expr(nc);
    for (int c = 0; c < nc; ++c) expr[c] = sys.resolve(c);
    std::vector<int> root_col(nc, -1), int_col(sys.num_integers(), -1);
    int ncont = 0;
    for (int c = 0; c < nc; ++c) {
        const int r = std::get<0>(expr[c]);
        if (r >= 0 && root_col[r] < 0) root_col[r] = ncont++;
    }
    std::vector<int> free_ints;
    for (int j = 0; j < sys.num_integers(); ++j)
        if (!sys.eliminated(j)) {
            int_col[j] = ncont + static_cast<int>(free_ints.size());
            free_ints.push_back(j);
        }
    const int nz = ncont + static_cast<int>(free_ints.size());

    SeamlessField out;
    out.rho = rho;
    out.integer_variables = static_cast<int>(free_ints.size());
    out.target.resize(2 * nf);
    for (int f = 0; f < nf; ++f) out.target.segment<2>(2 * f) = rho * cut.face_sign[f] * gamma_c.segment<2>(2 * f);

    // weighted gradient rows: sqrt(m_f) * sum_c u_c grad(phi_c)
    std::vector<Eigen::Triplet<double>> at;
    for (int f = 0; f < nf; ++f) {
        const double w = std::sqrt(masses.face(f));
        for (int c = 0; c < 3; ++c) {
            const int k = layout.corner_copy(f, c);
            for (int j = 0; j < 2; ++j) at.emplace_back(2 * f + j, k, w * ops.corner_gradient[f][c](j));
        }
    }
    SpMat A(2 * nf, nc);
    A.setFromTriplets(at.begin(), at.end());
    Eigen::VectorXd b(2 * nf);
    for (int f = 0; f < nf; ++f) b.segment<2>(2 * f) = std::sqrt(masses.face(f)) * out.target.segment<2>(2 * f);

    std::vector<std::optional<double>> fixed_int(sys.num_integers());
    auto assemble = [&](SpMat& P, Eigen::VectorXd& q) {
        std::vector<Eigen::Triplet<double>> pt;
        q = Eigen::VectorXd::Zero(nc);
        for (int c = 0; c < nc; ++c) {
            const auto& [r, a, e] = expr[c];
            if (r >= 0) pt.emplace_back(c, root_col[r], a);
            q(c) += e.c;
            for (const auto& [j, coef] : e.t) {
                if (fixed_int[j])
                    q(c) += coef * *fixed_int[j];
                else
                    pt.emplace_back(c, int_col[j], coef);
            }
        }
        P.resize(nc, nz);
        P.setFromTriplets(pt.begin(), pt.end());
    };

    Eigen::VectorXd z = Eigen::VectorXd::Zero(nz);
    auto solve = [&]() {
        SpMat P;
        Eigen::VectorXd q;
        assemble(P, q);
        const SpMat AP = A * P;
        SpMat H = SpMat(AP.transpose() * AP);
        const Eigen::VectorXd rhs = AP.transpose() * (b - A * q);
        // tiny shift for the gauge; columns of fixed integers are empty
        double scale = 0.0;
        for (int i = 0; i < nz; ++i) scale = std::max(scale, H.coeff(i, i));
        SpMat I(nz, nz);
        I.setIdentity();
        H += (1e-12 * std::max(scale, 1.0)) * I;
        Eigen::SimplicialLDLT<SpMat> solver(H);
        if (solver.info() != Eigen::Success) throw SolverError("integration: normal equations factorization failed");
        z = solver.solve(rhs);
        for (int j : free_ints)
            if (fixed_int[j]) z(int_col[j]) = 0.0;
        return Eigen::VectorXd(P * z + q);
    };

    Eigen::VectorXd u = solve();
    if (!relaxed) {
        for (;;) {
            int pick = -1;
            double best = 2.0;
            for (int j : free_ints) {
                if (fixed_int[j]) continue;
                const double d = std::abs(z(int_col[j]) - std::round(z(int_col[j])));
                if (d < best) {
                    best = d;
                    pick = j;
                }
            }
            if (pick < 0) break;
            for (int j : free_ints)
                if (!fixed_int[j] && std::abs(z(int_col[j]) - std::round(z(int_col[j]))) <= std::max(best, 1e-9))
                    fixed_int[j] = std::round(z(int_col[j]));
            ++out.rounding_steps;
            u = solve();
        }
    }

    out.copy_u = u;
    out.copy_vertex = layout.copy_vertex;
    out.corner_copy = layout.corner_copy;
    out.corner_u.resize(nf, 3);
    for (int f = 0; f < nf; ++f)
        for (int c = 0; c < 3; ++c) out.corner_u(f, c) = u(layout.corner_copy(f, c));

    out.edge_sign = edge_sign;
    out.edge_shift = Eigen::VectorXd::Zero(ne);
    for (int e = 0; e < ne; ++e) {
        if (!edge_sign[e] || !cut.cut_edge[e]) continue;
        const Edge& ed = mesh.edges[e];
        const double ua = out.corner_u(ed.f0, corner_of(mesh, ed.f0, ed.v0));
        const double ub = out.corner_u(ed.f1, corner_of(mesh, ed.f1, ed.v0));
        out.edge_shift(e) = ub - edge_sign[e] * ua;
    }

    out.gradient.resize(2 * nf);
    double num = 0.0, den = 0.0;
    for (int f = 0; f < nf; ++f) {
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (int c = 0; c < 3; ++c) g += out.corner_u(f, c) * ops.corner_gradient[f][c];
        out.gradient.segment<2>(2 * f) = g;
        num += masses.face(f) * (g - out.target.segment<2>(2 * f)).squaredNorm();
        den += masses.face(f) * out.target.segment<2>(2 * f).squaredNorm();
    }
    out.residual = den > 0 ? std::sqrt(num / den) : 0.0;
    if (!relaxed && out.residual > options.residual_warning)
        log_warn("field not integrable to tolerance: relative residual " + std::to_string(out.residual));
    log_debug("integration: " + std::to_string(nc) + " corner copies, " + std::to_string(out.integer_variables) +
              " integer variables, " + std::to_string(out.rounding_steps) + " rounding steps, residual " +
              std::to_string(out.residual));
    return out;
}

double resolution_for_strips(const TriMesh& mesh, const DiscreteOperators& ops, const MassMatrices& masses,
                             const CutGraph& cut, const RawField& raw, const Eigen::VectorXd& gamma_c, int strips) {
    if (strips < 1) throw std::invalid_argument("strip count must be positive");
    const SeamlessField pilot = integrate_u(mesh, ops, masses, cut, raw, gamma_c, 1.0, {}, true);
    const double range = pilot.max_value() - pilot.min_value();
    if (!(range > 0)) throw SolverError("integration: pilot field is constant");
    return strips / range;
}

void write_u_obj(const std::filesystem::path& path, const TriMesh& mesh, const SeamlessField& field) {
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write " + path.string());
    out.precision(17);
    out << "# u in the first texture coordinate, rho " << field.rho << '\n';
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << "v " << mesh.V(v, 0) << ' ' << mesh.V(v, 1) << ' ' << mesh.V(v, 2) << '\n';
    for (int f = 0; f < mesh.num_faces(); ++f)
        for (int c = 0; c < 3; ++c) out << "vt " << field.corner_u(f, c) << " 0\n";
    for (int f = 0; f < mesh.num_faces(); ++f) {
        out << 'f';
        for (int c = 0; c < 3; ++c) out << ' ' << mesh.F(f, c) + 1 << '/' << 3 * f + c + 1;
        out << '\n';
    }
    if (!out) throw MeshError("failed writing " + path.string());
}

}  // namespace pqstrip
