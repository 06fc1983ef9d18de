#include "pqstrip/meshing.hpp"

#include "pqstrip/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

namespace pqstrip {

std::string to_string(PolyFaceKind kind) { return kind == PolyFaceKind::strip ? "strip" : "planar"; }

namespace {

constexpr double kSnap = 1e-8;

/// Corner values with near-integers moved off the integer. The direction
/// follows the seam signs around each vertex so all copies agree.
Eigen::MatrixX3d perturbed_values(const TriMesh& mesh, const SeamlessField& field, int* count) {
    Eigen::MatrixX3d u = field.corner_u;
    int n = 0;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const VertexRing& ring = mesh.rings[v];
        int sigma = 1;
        for (size_t i = 0; i < ring.faces.size(); ++i) {
            const int f = ring.faces[i], c = ring.corners[i];
            double& x = u(f, c);
            const double r = std::round(x);
            if (std::abs(x - r) < kSnap) {
                x = r + sigma * kSnap;
                ++n;
            }
            const int e = mesh.FE(f, (c + 2) % 3);
            if (field.edge_sign[e] != 0) sigma *= field.edge_sign[e];
        }
    }
    if (count) *count = n;
    return u;
}

struct NodeKey {
    int edge, side;
    long long level;
    bool operator<(const NodeKey& o) const { return std::tie(edge, side, level) < std::tie(o.edge, o.side, o.level); }
};

/// Crossing nodes and per-face segments, shared by tracing and assembly.
struct Crossings {
    LevelSetNetwork net;
    std::map<NodeKey, int> index;
    Eigen::MatrixX3d u;

    int node(const TriMesh& mesh, const SeamlessField& field, const std::vector<char>& decoupled, int f, int slot,
             double level) {
        const int e = mesh.FE(f, slot);
        const Edge& ed = mesh.edges[e];
        const bool own = ed.is_boundary() || decoupled[e];
        const int side = own && ed.f0 != f ? 1 : 0;
        double key_level = level;
        if (!own && f != ed.f0) key_level = field.edge_sign[e] * (level - field.edge_shift(e));
        const NodeKey key{e, side, std::llround(key_level)};
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        const int a = mesh.F(f, slot), b = mesh.F(f, (slot + 1) % 3);
        const double ua = u(f, slot), ub = u(f, (slot + 1) % 3);
        const double t = (level - ua) / (ub - ua);
        LevelNode nd;
        nd.edge = e;
        nd.side = side;
        nd.param = a == ed.v0 ? t : 1.0 - t;
        nd.level = static_cast<double>(key.level);
        nd.terminal = own;
        nd.position = (1.0 - t) * mesh.V.row(a).transpose() + t * mesh.V.row(b).transpose();
        net.nodes.push_back(nd);
        const int id = static_cast<int>(net.nodes.size()) - 1;
        index.emplace(key, id);
        return id;
    }
};

std::vector<char> decoupled_edges(const SeamlessField& field, const TriMesh& mesh) {
    std::vector<char> d(mesh.num_edges(), 0);
    for (int e = 0; e < mesh.num_edges(); ++e) d[e] = !mesh.edges[e].is_boundary() && field.edge_sign[e] == 0;
    return d;
}

/// Integer levels strictly between a and b, ordered from a to b.
std::vector<double> levels_between(double a, double b) {
    std::vector<double> out;
    if (a < b)
        for (double k = std::ceil(a); k < b; k += 1.0) out.push_back(k);
    else
        for (double k = std::floor(a); k > b; k -= 1.0) out.push_back(k);
    return out;
}

Crossings compute_crossings(const TriMesh& mesh, const SeamlessField& field,
                            std::vector<std::vector<std::pair<int, int>>>* face_segments) {
    Crossings cr;
    cr.u = perturbed_values(mesh, field, &cr.net.perturbed_values);
    if (cr.net.perturbed_values > 0)
        log_info("level tracing: " + std::to_string(cr.net.perturbed_values) +
                 " corner values on an integer level perturbed by 1e-8");
    const std::vector<char> decoupled = decoupled_edges(field, mesh);
    if (face_segments) face_segments->assign(mesh.num_faces(), {});
    for (int f = 0; f < mesh.num_faces(); ++f) {
        std::map<long long, std::vector<int>> per_level;
        for (int k = 0; k < 3; ++k)
            for (double L : levels_between(cr.u(f, k), cr.u(f, (k + 1) % 3)))
                per_level[std::llround(L)].push_back(cr.node(mesh, field, decoupled, f, k, L));
        for (const auto& [L, ids] : per_level) {
            if (ids.size() != 2) throw MeshError("level tracing: level crosses a face " + std::to_string(ids.size()) + " times");
            if (face_segments) (*face_segments)[f].emplace_back(ids[0], ids[1]);
        }
    }
    return cr;
}

}  // namespace

LevelSetNetwork trace_levels(const TriMesh& mesh, const SeamlessField& field) {
    std::vector<std::vector<std::pair<int, int>>> segs;
    Crossings cr = compute_crossings(mesh, field, &segs);
    LevelSetNetwork net = std::move(cr.net);
    const int n = static_cast<int>(net.nodes.size());
    std::vector<std::vector<int>> adj(n);
    for (const auto& fs : segs)
        for (const auto& [a, b] : fs) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
    int dangling = 0;
    for (int i = 0; i < n; ++i) {
        if (adj[i].size() > 2) throw MeshError("level tracing: branching level set");
        dangling += adj[i].size() == 1 && !net.nodes[i].terminal;
    }
    if (dangling) log_warn("level tracing: " + std::to_string(dangling) + " polylines end inside the surface");

    std::vector<char> used(n, 0);
    auto walk = [&](int start) {
        LevelPolyline pl;
        int prev = -1, cur = start;
        while (cur >= 0 && !used[cur]) {
            used[cur] = 1;
            pl.nodes.push_back(cur);
            int next = -1;
            for (int x : adj[cur])
                if (x != prev && !used[x]) {
                    next = x;
                    break;
                }
            prev = cur;
            cur = next;
        }
        pl.level = net.nodes[start].level;
        return pl;
    };
    for (int i = 0; i < n; ++i)
        if (!used[i] && adj[i].size() <= 1) net.polylines.push_back(walk(i));
    for (int i = 0; i < n; ++i)
        if (!used[i]) {
            LevelPolyline pl = walk(i);
            pl.closed = true;
            net.polylines.push_back(std::move(pl));
        }
    return net;
}

LevelSetNetwork collapse_valence2(const LevelSetNetwork& network) {
    LevelSetNetwork out = network;
    for (LevelPolyline& pl : out.polylines) {
        if (pl.closed || pl.nodes.size() <= 2) continue;
        pl.nodes = {pl.nodes.front(), pl.nodes.back()};
    }
    return out;
}

PolyMesh assemble_polymesh(const TriMesh& mesh, const SeamlessField& field, const CutGraph& cut,
                           const LevelSetNetwork& traced, const RawField& raw, const Eigen::VectorXd& weights,
                           const MeshingOptions& options) {
    (void)cut;
    const int nv = mesh.num_vertices();
    Crossings cr = compute_crossings(mesh, field, nullptr);
    if (cr.net.nodes.size() != traced.nodes.size()) throw MeshError("level network does not match the field");
    const std::vector<char> decoupled = decoupled_edges(field, mesh);

    // nodes that survive as polygon corners
    std::vector<char> keep(traced.nodes.size(), 0), in_closed(traced.nodes.size(), 0);
    for (const LevelPolyline& pl : traced.polylines) {
        if (pl.closed) {
            for (int n : pl.nodes) keep[n] = in_closed[n] = 1;
        } else if (!pl.nodes.empty()) {
            keep[pl.nodes.front()] = keep[pl.nodes.back()] = 1;
        }
    }
    for (size_t i = 0; i < traced.nodes.size(); ++i)
        if (traced.nodes[i].terminal) keep[i] = 1;

    // band polygons inside each triangle; points are vertex ids or nv + node id
    struct Half {
        int from, to, sub, edge;
        bool chord;
    };
    std::vector<Half> halves;
    std::vector<int> sub_face;
    std::vector<double> sub_band;
    std::vector<char> sub_singular;
    std::vector<char> singular(nv, 0);
    for (int v : raw.singular_vertices) singular[v] = 1;

    for (int f = 0; f < mesh.num_faces(); ++f) {
        struct Pt {
            int id, slot;
            bool corner;
            double value;  // corner value or level
        };
        std::vector<Pt> ring;
        for (int k = 0; k < 3; ++k) {
            ring.push_back({mesh.F(f, k), k, true, cr.u(f, k)});
            for (double L : levels_between(cr.u(f, k), cr.u(f, (k + 1) % 3)))
                ring.push_back({nv + cr.node(mesh, field, decoupled, f, k, L), k, false, L});
        }
        const double lo = std::floor(cr.u.row(f).minCoeff()), hi = std::floor(cr.u.row(f).maxCoeff());
        const int m = static_cast<int>(ring.size());
        for (double b = lo; b <= hi; b += 1.0) {
            std::vector<int> sel;
            for (int i = 0; i < m; ++i) {
                const Pt& p = ring[i];
                if (p.corner ? std::floor(p.value) == b : (p.value == b || p.value == b + 1)) sel.push_back(i);
            }
            if (sel.size() < 3) continue;
            const int sub = static_cast<int>(sub_face.size());
            sub_face.push_back(f);
            sub_band.push_back(b);
            bool sing = false;
            for (int i : sel) sing |= ring[i].corner && singular[ring[i].id];
            sub_singular.push_back(sing);
            for (size_t j = 0; j < sel.size(); ++j) {
                const int i = sel[j], i2 = sel[(j + 1) % sel.size()];
                const Pt &p = ring[i], &q = ring[i2];
                const bool adjacent = (i + 1) % m == i2;
                if (adjacent)
                    halves.push_back({p.id, q.id, sub, mesh.FE(f, p.slot), false});
                else
                    halves.push_back({p.id, q.id, sub, -1, true});
            }
        }
    }

    // regions: bands glued across interior, non-decoupled edges
    const int ns = static_cast<int>(sub_face.size());
    std::vector<int> parent(ns);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::map<std::tuple<int, int, int>, int> portion;
    for (const Half& h : halves) {
        if (h.chord) continue;
        const Edge& ed = mesh.edges[h.edge];
        if (ed.is_boundary() || decoupled[h.edge]) continue;
        const auto key = std::make_tuple(h.edge, std::min(h.from, h.to), std::max(h.from, h.to));
        auto [it, fresh] = portion.emplace(key, h.sub);
        if (!fresh) parent[find(h.sub)] = find(it->second);
    }

    std::map<int, int> region_of_root;
    std::vector<int> region(ns);
    for (int s = 0; s < ns; ++s) {
        const int r = find(s);
        auto it = region_of_root.emplace(r, static_cast<int>(region_of_root.size())).first;
        region[s] = it->second;
    }
    const int nr = static_cast<int>(region_of_root.size());
    std::vector<std::vector<int>> region_halves(nr);
    for (int i = 0; i < static_cast<int>(halves.size()); ++i) {
        const Half& h = halves[i];
        if (!h.chord) {
            const Edge& ed = mesh.edges[h.edge];
            if (!ed.is_boundary() && !decoupled[h.edge]) continue;
        }
        region_halves[region[h.sub]].push_back(i);
    }

    PolyMesh out;
    std::unordered_map<int, int> out_vertex;
    std::vector<Eigen::Vector3d> verts;
    auto emit = [&](int pid) {
        auto it = out_vertex.find(pid);
        if (it != out_vertex.end()) return it->second;
        const int id = static_cast<int>(verts.size());
        verts.push_back(pid < nv ? Eigen::Vector3d(mesh.V.row(pid)) : traced.nodes[pid - nv].position);
        out.source_vertex.push_back(pid < nv ? pid : -1);
        out_vertex.emplace(pid, id);
        return id;
    };
    auto position = [&](int pid) -> Eigen::Vector3d {
        return pid < nv ? Eigen::Vector3d(mesh.V.row(pid)) : traced.nodes[pid - nv].position;
    };

    std::vector<std::vector<int>> region_subs(nr);
    for (int s = 0; s < ns; ++s) region_subs[region[s]].push_back(s);

    for (int r = 0; r < nr; ++r) {
        std::multimap<int, int> outgoing;
        for (int i : region_halves[r]) outgoing.emplace(halves[i].from, i);
        std::set<int> unused(region_halves[r].begin(), region_halves[r].end());
        std::vector<std::vector<int>> loops;
        bool closed_level = false;
        while (!unused.empty()) {
            std::vector<int> loop;
            int h = *unused.begin();
            while (unused.count(h)) {
                unused.erase(h);
                const int p = halves[h].from;
                if (p < nv || keep[p - nv]) loop.push_back(p);
                if (p >= nv && in_closed[p - nv]) closed_level = true;
                int next = -1;
                auto range = outgoing.equal_range(halves[h].to);
                for (auto it = range.first; it != range.second; ++it)
                    if (unused.count(it->second)) {
                        next = it->second;
                        break;
                    }
                if (next < 0) break;
                h = next;
            }
            if (!loop.empty()) loops.push_back(std::move(loop));
        }
        if (loops.empty()) continue;
        // bridge extra boundary loops into the first one with a seam edge pair
        std::vector<int> poly = loops[0];
        for (size_t l = 1; l < loops.size(); ++l) {
            size_t bi = 0, bj = 0;
            double best = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < poly.size(); ++i)
                for (size_t j = 0; j < loops[l].size(); ++j) {
                    const double d = (position(poly[i]) - position(loops[l][j])).squaredNorm();
                    if (d < best) {
                        best = d;
                        bi = i;
                        bj = j;
                    }
                }
            std::vector<int> merged(poly.begin(), poly.begin() + bi + 1);
            for (size_t k = 0; k <= loops[l].size(); ++k) merged.push_back(loops[l][(bj + k) % loops[l].size()]);
            merged.insert(merged.end(), poly.begin() + bi, poly.end());
            poly = std::move(merged);
        }
        std::set<int> distinct(poly.begin(), poly.end());
        if (distinct.size() < 3) {
            ++out.dropped_slivers;
            continue;
        }
        std::vector<int> face;
        for (int p : poly) face.push_back(emit(p));

        std::set<int> src;
        bool sing = false;
        for (int s : region_subs[r]) {
            src.insert(sub_face[s]);
            sing |= sub_singular[s];
        }
        double wsum = 0.0, asum = 0.0;
        for (int f : src) {
            const double a = mesh.face_area(f);
            wsum += a * (weights.size() == mesh.num_faces() ? weights(f) : 0.0);
            asum += a;
        }
        const bool planar = sing || (asum > 0 && wsum / asum < options.planar_weight);
        const double b = sub_band[region_subs[r].front()];
        out.faces.push_back(std::move(face));
        out.kind.push_back(planar ? PolyFaceKind::planar : PolyFaceKind::strip);
        out.levels.emplace_back(b, b + 1);
        out.has_closed_level.push_back(closed_level);
        out.source_faces.emplace_back(src.begin(), src.end());
    }
    out.V.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) out.V.row(static_cast<Eigen::Index>(i)) = verts[i];
    if (out.dropped_slivers) log_info("meshing: dropped " + std::to_string(out.dropped_slivers) + " sliver regions");
    return out;
}

std::vector<int> polymesh_euler(const PolyMesh& mesh) {
    const int n = mesh.num_vertices();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::set<std::pair<int, int>> edges;
    for (const auto& f : mesh.faces)
        for (size_t i = 0; i < f.size(); ++i) {
            const int a = f[i], b = f[(i + 1) % f.size()];
            if (a == b) continue;
            edges.emplace(std::min(a, b), std::max(a, b));
            parent[find(a)] = find(b);
        }
    std::map<int, int> chi;
    std::vector<char> used(n, 0);
    for (const auto& f : mesh.faces) {
        for (int v : f) used[v] = 1;
        chi[find(f[0])] += 1;
    }
    for (int v = 0; v < n; ++v)
        if (used[v]) chi[find(v)] += 1;
    for (const auto& [a, b] : edges) chi[find(a)] -= 1;
    std::vector<int> out;
    for (const auto& [root, c] : chi) out.push_back(c);
    return out;
}

double chord_deviation(const TriMesh& mesh, const LevelSetNetwork& traced, const Eigen::VectorXd& weights,
                       double threshold) {
    double worst = 0.0;
    for (const LevelPolyline& pl : traced.polylines) {
        if (pl.closed || pl.nodes.size() < 3) continue;
        bool torsal = true;
        for (int n : pl.nodes) {
            const Edge& ed = mesh.edges[traced.nodes[n].edge];
            torsal &= weights(ed.f0) > threshold && (ed.f1 < 0 || weights(ed.f1) > threshold);
        }
        if (!torsal) continue;
        const Eigen::Vector3d a = traced.nodes[pl.nodes.front()].position, b = traced.nodes[pl.nodes.back()].position;
        const Eigen::Vector3d d = b - a;
        const double l = d.squaredNorm();
        for (int n : pl.nodes) {
            const Eigen::Vector3d p = traced.nodes[n].position;
            const double t = l > 0 ? std::clamp((p - a).dot(d) / l, 0.0, 1.0) : 0.0;
            worst = std::max(worst, (a + t * d - p).norm());
        }
    }
    return worst;
}

int count_chord_crossings(const LevelSetNetwork& collapsed, double diagonal, double tolerance) {
    struct Chord {
        Eigen::Vector3d a, b;
    };
    std::vector<Chord> chords;
    for (const LevelPolyline& pl : collapsed.polylines) {
        const size_t n = pl.nodes.size();
        for (size_t i = 0; i + 1 < n + (pl.closed ? 1 : 0); ++i)
            chords.push_back({collapsed.nodes[pl.nodes[i]].position, collapsed.nodes[pl.nodes[(i + 1) % n]].position});
    }
    const double tol = tolerance * diagonal;
    int crossings = 0;
    for (size_t i = 0; i < chords.size(); ++i)
        for (size_t j = i + 1; j < chords.size(); ++j) {
            // closest points of two segments
            const Eigen::Vector3d d1 = chords[i].b - chords[i].a, d2 = chords[j].b - chords[j].a,
                                  r = chords[i].a - chords[j].a;
            const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r), c = d1.dot(r), b = d1.dot(d2);
            const double denom = a * e - b * b;
            if (a <= 0 || e <= 0 || denom <= 1e-14 * a * e) continue;  // parallel chords cannot cross properly
            double s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
            double t = (b * s + f) / e;
            if (t < 0 || t > 1) {
                t = std::clamp(t, 0.0, 1.0);
                s = std::clamp((b * t - c) / a, 0.0, 1.0);
            }
            const double margin = 1e-6;
            if (s <= margin || s >= 1 - margin || t <= margin || t >= 1 - margin) continue;
            if ((chords[i].a + s * d1 - chords[j].a - t * d2).norm() <= tol) ++crossings;
        }
    return crossings;
}

void write_polymesh(const std::filesystem::path& path, const PolyMesh& mesh) {
    if (mesh.faces.empty()) throw MeshError("refusing to write an empty polygon mesh");
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write " + path.string());
    out.precision(17);
    out << "# " << mesh.num_vertices() << " vertices, " << mesh.num_faces() << " faces\n";
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out << "v " << mesh.V(v, 0) << ' ' << mesh.V(v, 1) << ' ' << mesh.V(v, 2) << '\n';
    for (int f = 0; f < mesh.num_faces(); ++f) {
        out << "# " << to_string(mesh.kind[f]) << " levels " << mesh.levels[f].first << ' ' << mesh.levels[f].second;
        if (mesh.has_closed_level[f]) out << " closed";
        out << "\nf";
        for (int v : mesh.faces[f]) out << ' ' << v + 1;
        out << '\n';
    }
    if (!out) throw MeshError("failed writing " + path.string());
}

}  // namespace pqstrip
