#include "pqstrip/mesh.hpp"

#include "pqstrip/log.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cstdint>
#include <unordered_map>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

namespace pqstrip {

namespace {

std::int64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

void build_rings(TriMesh& mesh) {
    const int nv = mesh.num_vertices();
    std::vector<std::vector<std::pair<int, int>>> incident(nv);
    for (int f = 0; f < mesh.num_faces(); ++f)
        for (int c = 0; c < 3; ++c) incident[mesh.F(f, c)].push_back({f, c});

    mesh.rings.assign(nv, VertexRing{});
    for (int v = 0; v < nv; ++v) {
        const auto& inc = incident[v];
        if (inc.empty())
            throw MeshError("vertex " + std::to_string(v) + " is not referenced by any face");

        // Start at the face whose clockwise side (edge slot c) is on the boundary.
        std::pair<int, int> start = inc.front();
        bool open = false;
        for (const auto& [f, c] : inc) {
            if (mesh.edges[mesh.FE(f, c)].is_boundary()) {
                start = {f, c};
                open = true;
                break;
            }
        }

        VertexRing ring;
        auto [f, c] = start;
        while (true) {
            ring.faces.push_back(f);
            ring.corners.push_back(c);
            const int g = mesh.neighbor(f, (c + 2) % 3);
            if (g < 0) break;
            if (g == start.first) break;
            int cg = -1;
            for (int k = 0; k < 3; ++k)
                if (mesh.F(g, k) == v) cg = k;
            f = g;
            c = cg;
            if (ring.faces.size() > inc.size()) break;
        }
        ring.closed = !open;
        if (ring.faces.size() != inc.size())
            throw MeshError("non-manifold vertex " + std::to_string(v) + " (" + std::to_string(inc.size()) +
                            " incident faces, fan of " + std::to_string(ring.faces.size()) + ")");
        mesh.rings[v] = std::move(ring);
    }
}

void update_derived(TriMesh& mesh) {
    const int nv = mesh.num_vertices();
    const int nf = mesh.num_faces();
    mesh.boundary_vertex.assign(nv, 0);
    mesh.crease_vertex.assign(nv, 0);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges[e];
        if (ed.is_boundary()) mesh.boundary_vertex[ed.v0] = mesh.boundary_vertex[ed.v1] = 1;
        if (mesh.crease_edge[e]) mesh.crease_vertex[ed.v0] = mesh.crease_vertex[ed.v1] = 1;
    }
    mesh.boundary_face.assign(nf, 0);
    mesh.crease_face.assign(nf, 0);
    for (int f = 0; f < nf; ++f) {
        for (int c = 0; c < 3; ++c) {
            const int v = mesh.F(f, c);
            if (mesh.boundary_vertex[v]) mesh.boundary_face[f] = 1;
            if (mesh.crease_vertex[v]) mesh.crease_face[f] = 1;
        }
    }
}

std::vector<VertexPair> crease_pairs_of(const TriMesh& mesh) {
    std::vector<VertexPair> pairs;
    for (int e : mesh.crease_edge_list()) pairs.push_back({mesh.edges[e].v0, mesh.edges[e].v1});
    return pairs;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

// ============================================================================
// TriMesh queries
// ============================================================================

int TriMesh::find_edge(int a, int b) const {
    if (a < 0 || a >= num_vertices()) return -1;
    for (int f : rings[a].faces) {
        for (int k = 0; k < 3; ++k) {
            const Edge& e = edges[FE(f, k)];
            if ((e.v0 == a && e.v1 == b) || (e.v0 == b && e.v1 == a)) return FE(f, k);
        }
    }
    return -1;
}

int TriMesh::neighbor(int f, int k) const {
    const Edge& e = edges[FE(f, k)];
    return e.f0 == f ? e.f1 : e.f0;
}

std::vector<int> TriMesh::crease_edge_list() const {
    std::vector<int> out;
    for (int e = 0; e < num_edges(); ++e)
        if (crease_edge[e]) out.push_back(e);
    return out;
}

Eigen::Vector3d TriMesh::face_normal(int f) const {
    const Eigen::Vector3d a = V.row(F(f, 0)), b = V.row(F(f, 1)), c = V.row(F(f, 2));
    return (b - a).cross(c - a).normalized();
}

double TriMesh::face_area(int f) const {
    const Eigen::Vector3d a = V.row(F(f, 0)), b = V.row(F(f, 1)), c = V.row(F(f, 2));
    return 0.5 * (b - a).cross(c - a).norm();
}

Eigen::Vector3d TriMesh::barycenter(int f) const {
    return (V.row(F(f, 0)) + V.row(F(f, 1)) + V.row(F(f, 2))).transpose() / 3.0;
}

double TriMesh::mean_edge_length() const {
    if (edges.empty()) return 0.0;
    double sum = 0.0;
    for (const Edge& e : edges) sum += (V.row(e.v1) - V.row(e.v0)).norm();
    return sum / static_cast<double>(edges.size());
}

// ============================================================================
// Construction
// ============================================================================

TriMesh build_mesh(Eigen::MatrixX3d V, Eigen::MatrixX3i F, const std::vector<VertexPair>& crease_pairs) {
    TriMesh mesh;
    mesh.V = std::move(V);
    mesh.F = std::move(F);
    const int nv = mesh.num_vertices();
    const int nf = mesh.num_faces();
    if (nf == 0) throw MeshError("mesh has no faces");

    for (int f = 0; f < nf; ++f) {
        for (int c = 0; c < 3; ++c) {
            const int v = mesh.F(f, c);
            if (v < 0 || v >= nv)
                throw MeshError("face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                                " out of range");
        }
        if (mesh.F(f, 0) == mesh.F(f, 1) || mesh.F(f, 1) == mesh.F(f, 2) || mesh.F(f, 0) == mesh.F(f, 2))
            throw MeshError("face " + std::to_string(f) + " repeats a vertex");
    }

    std::unordered_map<std::int64_t, int> lookup;
    lookup.reserve(static_cast<std::size_t>(3 * nf));
    mesh.FE.resize(nf, 3);
    for (int f = 0; f < nf; ++f) {
        for (int k = 0; k < 3; ++k) {
            const int a = mesh.F(f, k);
            const int b = mesh.F(f, (k + 1) % 3);
            const auto key = edge_key(a, b);
            auto it = lookup.find(key);
            if (it == lookup.end()) {
                lookup.emplace(key, mesh.num_edges());
                mesh.FE(f, k) = mesh.num_edges();
                mesh.edges.push_back(Edge{a, b, f, -1, k, -1});
                continue;
            }
            Edge& e = mesh.edges[it->second];
            if (e.f1 >= 0)
                throw MeshError("non-manifold edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                ") has more than two incident faces");
            if (e.v0 == a)
                throw MeshError("inconsistent face orientation across edge (" + std::to_string(a) + ", " +
                                std::to_string(b) + ")");
            e.f1 = f;
            e.k1 = k;
            mesh.FE(f, k) = it->second;
        }
    }

    build_rings(mesh);

    mesh.crease_edge.assign(mesh.num_edges(), 0);
    for (const auto& [a, b] : crease_pairs) {
        if (a < 0 || a >= nv || b < 0 || b >= nv)
            throw MeshError("crease edge (" + std::to_string(a) + ", " + std::to_string(b) +
                            ") references a nonexistent vertex");
        auto it = lookup.find(edge_key(a, b));
        if (it == lookup.end())
            throw MeshError("crease pair (" + std::to_string(a) + ", " + std::to_string(b) + ") is not a mesh edge");
        mesh.crease_edge[it->second] = 1;
    }
    update_derived(mesh);
    return mesh;
}

TriMesh with_crease_edges(const TriMesh& mesh, const std::vector<int>& crease_edges) {
    TriMesh out = mesh;
    out.crease_edge.assign(out.num_edges(), 0);
    for (int e : crease_edges) {
        if (e < 0 || e >= out.num_edges()) throw MeshError("crease edge index out of range");
        out.crease_edge[e] = 1;
    }
    update_derived(out);
    return out;
}

// ============================================================================
// I/O
// ============================================================================

PolygonSoup read_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open " + path.string());

    PolygonSoup soup;
    std::vector<Eigen::Vector3d> verts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            soup.comments.push_back(trim(t.substr(1)));
            continue;
        }
        std::istringstream ss(t);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(ss >> p.x() >> p.y() >> p.z()))
                throw MeshError(path.string() + ":" + std::to_string(lineno) + ": malformed vertex");
            verts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> face;
            std::string tok;
            while (ss >> tok) {
                const int idx = std::stoi(tok.substr(0, tok.find('/')));
                const int n = static_cast<int>(verts.size());
                face.push_back(idx < 0 ? n + idx : idx - 1);
            }
            if (face.size() < 3)
                throw MeshError(path.string() + ":" + std::to_string(lineno) + ": face with fewer than 3 vertices");
            soup.faces.push_back(std::move(face));
        }
    }
    soup.V.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) soup.V.row(static_cast<Eigen::Index>(i)) = verts[i];
    return soup;
}

void write_obj(const std::filesystem::path& path, const Eigen::MatrixX3d& V,
               const std::vector<std::vector<int>>& faces, const std::vector<std::string>& header) {
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write " + path.string());
    out.precision(17);
    for (const auto& h : header) out << "# " << h << '\n';
    for (Eigen::Index i = 0; i < V.rows(); ++i) out << "v " << V(i, 0) << ' ' << V(i, 1) << ' ' << V(i, 2) << '\n';
    for (const auto& f : faces) {
        out << 'f';
        for (int v : f) out << ' ' << v + 1;
        out << '\n';
    }
    if (!out) throw MeshError("failed writing " + path.string());
}

std::vector<VertexPair> read_crease_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open crease file " + path.string());
    std::vector<VertexPair> pairs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ss(t);
        int a = 0, b = 0;
        if (!(ss >> a >> b))
            throw MeshError(path.string() + ":" + std::to_string(lineno) + ": expected two vertex indices");
        pairs.push_back({a, b});
    }
    return pairs;
}

void write_crease_file(const std::filesystem::path& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write " + path.string());
    for (const auto& [a, b] : crease_pairs_of(mesh)) out << a << ' ' << b << '\n';
}

TriMesh load_mesh(const std::filesystem::path& path, const std::optional<std::filesystem::path>& crease_path,
                  bool fan_triangulate) {
    PolygonSoup soup = read_obj(path);
    std::vector<Eigen::Vector3d> extra;
    std::vector<std::array<int, 3>> tris;
    const int nv = static_cast<int>(soup.V.rows());
    for (std::size_t i = 0; i < soup.faces.size(); ++i) {
        const auto& f = soup.faces[i];
        if (f.size() == 3) {
            tris.push_back({f[0], f[1], f[2]});
            continue;
        }
        if (!fan_triangulate)
            throw MeshError("face " + std::to_string(i) + " has " + std::to_string(f.size()) +
                            " vertices; only triangles are accepted (see --fan-triangulate)");
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (int v : f) c += soup.V.row(v).transpose();
        c /= static_cast<double>(f.size());
        const int center = nv + static_cast<int>(extra.size());
        extra.push_back(c);
        for (std::size_t k = 0; k < f.size(); ++k) tris.push_back({f[k], f[(k + 1) % f.size()], center});
    }

    Eigen::MatrixX3d V(nv + static_cast<int>(extra.size()), 3);
    V.topRows(nv) = soup.V;
    for (std::size_t i = 0; i < extra.size(); ++i) V.row(nv + static_cast<Eigen::Index>(i)) = extra[i];
    Eigen::MatrixX3i F(static_cast<Eigen::Index>(tris.size()), 3);
    for (std::size_t i = 0; i < tris.size(); ++i)
        for (int k = 0; k < 3; ++k) F(static_cast<Eigen::Index>(i), k) = tris[i][k];

    std::vector<VertexPair> creases;
    if (crease_path) creases = read_crease_file(*crease_path);
    return build_mesh(std::move(V), std::move(F), creases);
}

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh) {
    std::vector<std::vector<int>> faces(mesh.num_faces());
    for (int f = 0; f < mesh.num_faces(); ++f) faces[f] = {mesh.F(f, 0), mesh.F(f, 1), mesh.F(f, 2)};
    write_obj(path, mesh.V, faces);
}

// ============================================================================
// Normalization and preprocessing
// ============================================================================

double bbox_diagonal(const Eigen::MatrixX3d& V) {
    if (V.rows() == 0) return 0.0;
    return (V.colwise().maxCoeff() - V.colwise().minCoeff()).norm();
}

double normalize_bbox(TriMesh& mesh) {
    if (mesh.num_vertices() == 0) throw MeshError("cannot normalize an empty mesh");
    const double diag = bbox_diagonal(mesh.V);
    if (!(diag > 0.0)) throw MeshError("all vertices coincide; bounding box diagonal is zero");
    const double scale = 1.0 / diag;
    const Eigen::RowVector3d lo = mesh.V.colwise().minCoeff();
    mesh.V = ((mesh.V.rowwise() - lo) * scale).rowwise() + lo;
    return scale;
}

Eigen::VectorXd angle_defects(const TriMesh& mesh) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (int f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const Eigen::Vector3d p = mesh.V.row(mesh.F(f, c));
            const Eigen::Vector3d a = mesh.V.row(mesh.F(f, (c + 1) % 3)).transpose() - p;
            const Eigen::Vector3d b = mesh.V.row(mesh.F(f, (c + 2) % 3)).transpose() - p;
            sum(mesh.F(f, c)) += std::atan2(a.cross(b).norm(), a.dot(b));
        }
    }
    Eigen::VectorXd defect(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v)
        defect(v) = (mesh.boundary_vertex[v] ? M_PI : 2.0 * M_PI) - sum(v);
    return defect;
}

std::vector<int> detect_apexes(const TriMesh& mesh, double defect_threshold) {
    const Eigen::VectorXd defect = angle_defects(mesh);
    std::vector<int> apexes;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (!mesh.boundary_vertex[v] && !mesh.crease_vertex[v] && std::abs(defect(v)) > defect_threshold)
            apexes.push_back(v);
    return apexes;
}

TriMesh remove_apexes(const TriMesh& mesh, const std::vector<int>& apexes) {
    std::vector<char> removed(mesh.num_vertices(), 0);
    for (int v : apexes) {
        if (v < 0 || v >= mesh.num_vertices()) throw MeshError("apex index " + std::to_string(v) + " out of range");
        if (mesh.crease_vertex[v]) {
            log_info("apex " + std::to_string(v) + " lies on a crease; kept");
            continue;
        }
        removed[v] = 1;
    }

    std::vector<int> remap(mesh.num_vertices(), -1);
    std::vector<std::array<int, 3>> faces;
    for (int f = 0; f < mesh.num_faces(); ++f) {
        if (removed[mesh.F(f, 0)] || removed[mesh.F(f, 1)] || removed[mesh.F(f, 2)]) continue;
        faces.push_back({mesh.F(f, 0), mesh.F(f, 1), mesh.F(f, 2)});
        for (int c = 0; c < 3; ++c) remap[mesh.F(f, c)] = 0;
    }
    int next = 0;
    std::vector<int> kept;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (remap[v] == 0) {
            remap[v] = next++;
            kept.push_back(v);
        }
    }

    Eigen::MatrixX3d V(next, 3);
    for (int i = 0; i < next; ++i) V.row(i) = mesh.V.row(kept[i]);
    Eigen::MatrixX3i F(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i)
        for (int c = 0; c < 3; ++c) F(static_cast<Eigen::Index>(i), c) = remap[faces[i][c]];

    std::vector<VertexPair> creases;
    for (const auto& [a, b] : crease_pairs_of(mesh))
        if (remap[a] >= 0 && remap[b] >= 0) creases.push_back({remap[a], remap[b]});
    return build_mesh(std::move(V), std::move(F), creases);
}

TriMesh preprocess_apexes(const TriMesh& mesh, const ApexOptions& options) {
    std::vector<int> apexes = options.explicit_apexes;
    if (options.auto_detect) {
        for (int v : detect_apexes(mesh, options.defect_threshold)) apexes.push_back(v);
        std::sort(apexes.begin(), apexes.end());
        apexes.erase(std::unique(apexes.begin(), apexes.end()), apexes.end());
    }
    if (apexes.empty()) return mesh;
    return remove_apexes(mesh, apexes);
}

std::vector<int> detect_creases(const TriMesh& mesh, double dihedral_threshold) {
    std::vector<int> out;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges[e];
        if (ed.is_boundary()) continue;
        const Eigen::Vector3d n0 = mesh.face_normal(ed.f0), n1 = mesh.face_normal(ed.f1);
        const double deviation = std::atan2(n0.cross(n1).norm(), n0.dot(n1));
        if (deviation > dihedral_threshold) out.push_back(e);
    }
    return out;
}

TriMesh split_open_creases(const TriMesh& mesh) {
    const auto crease_list = mesh.crease_edge_list();
    if (crease_list.empty()) return mesh;

    // Crease components by shared vertices.
    std::vector<int> parent(mesh.num_vertices());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<int> degree(mesh.num_vertices(), 0);
    for (int e : crease_list) {
        const Edge& ed = mesh.edges[e];
        parent[find(ed.v0)] = find(ed.v1);
        ++degree[ed.v0];
        ++degree[ed.v1];
    }
    std::vector<char> open_root(mesh.num_vertices(), 0);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (degree[v] == 1 && !mesh.boundary_vertex[v]) open_root[find(v)] = 1;

    std::vector<char> cut(mesh.num_edges(), 0);
    bool any = false;
    std::vector<VertexPair> kept_creases;
    for (int e : crease_list) {
        const Edge& ed = mesh.edges[e];
        if (open_root[find(ed.v0)]) {
            cut[e] = 1;
            any = true;
        } else {
            kept_creases.push_back({ed.v0, ed.v1});
        }
    }
    if (!any) return mesh;

    // One new vertex per wedge of faces between cut edges.
    Eigen::MatrixX3i F = mesh.F;
    std::vector<Eigen::Vector3d> extra;
    int next = mesh.num_vertices();
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const VertexRing& ring = mesh.rings[v];
        const int n = static_cast<int>(ring.faces.size());
        std::vector<char> cut_after(n, 0);  // edge between faces[i] and faces[i+1]
        int cuts = 0;
        for (int i = 0; i < n; ++i) {
            if (!ring.closed && i == n - 1) break;
            const int e = mesh.FE(ring.faces[i], (ring.corners[i] + 2) % 3);
            if (cut[e]) {
                cut_after[i] = 1;
                ++cuts;
            }
        }
        if (cuts == 0 || (ring.closed && cuts == 1)) continue;

        int start = 0;
        if (ring.closed) {
            while (!cut_after[(start + n - 1) % n]) ++start;
        }
        int id = v;
        bool first = true;
        for (int j = 0; j < n; ++j) {
            const int i = (start + j) % n;
            if (!first && cut_after[(i + n - 1) % n]) {
                id = next++;
                extra.push_back(mesh.V.row(v));
            }
            first = false;
            F(ring.faces[i], ring.corners[i]) = id;
        }
    }

    Eigen::MatrixX3d V(next, 3);
    V.topRows(mesh.num_vertices()) = mesh.V;
    for (std::size_t i = 0; i < extra.size(); ++i) V.row(mesh.num_vertices() + static_cast<Eigen::Index>(i)) = extra[i];
    log_info("split " + std::to_string(extra.size()) + " vertices along open creases");
    return build_mesh(std::move(V), std::move(F), kept_creases);
}

std::vector<MeshComponent> split_components(const TriMesh& mesh) {
    const int nf = mesh.num_faces();
    std::vector<int> comp(nf, -1);
    int ncomp = 0;
    for (int seed = 0; seed < nf; ++seed) {
        if (comp[seed] >= 0) continue;
        std::queue<int> q;
        q.push(seed);
        comp[seed] = ncomp;
        while (!q.empty()) {
            const int f = q.front();
            q.pop();
            for (int k = 0; k < 3; ++k) {
                const int g = mesh.neighbor(f, k);
                if (g >= 0 && comp[g] < 0) {
                    comp[g] = ncomp;
                    q.push(g);
                }
            }
        }
        ++ncomp;
    }
    if (ncomp == 1) {
        MeshComponent c{mesh, {}, {}};
        c.vertex_map.resize(mesh.num_vertices());
        std::iota(c.vertex_map.begin(), c.vertex_map.end(), 0);
        c.face_map.resize(nf);
        std::iota(c.face_map.begin(), c.face_map.end(), 0);
        return {std::move(c)};
    }

    std::vector<MeshComponent> out;
    const auto creases = crease_pairs_of(mesh);
    for (int ci = 0; ci < ncomp; ++ci) {
        std::vector<int> local(mesh.num_vertices(), -1);
        MeshComponent c;
        std::vector<std::array<int, 3>> faces;
        for (int f = 0; f < nf; ++f) {
            if (comp[f] != ci) continue;
            std::array<int, 3> t{};
            for (int k = 0; k < 3; ++k) {
                const int v = mesh.F(f, k);
                if (local[v] < 0) {
                    local[v] = static_cast<int>(c.vertex_map.size());
                    c.vertex_map.push_back(v);
                }
                t[k] = local[v];
            }
            faces.push_back(t);
            c.face_map.push_back(f);
        }
        Eigen::MatrixX3d V(static_cast<Eigen::Index>(c.vertex_map.size()), 3);
        for (std::size_t i = 0; i < c.vertex_map.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = mesh.V.row(c.vertex_map[i]);
        Eigen::MatrixX3i F(static_cast<Eigen::Index>(faces.size()), 3);
        for (std::size_t i = 0; i < faces.size(); ++i)
            for (int k = 0; k < 3; ++k) F(static_cast<Eigen::Index>(i), k) = faces[i][k];
        std::vector<VertexPair> cp;
        for (const auto& [a, b] : creases)
            if (local[a] >= 0 && local[b] >= 0) cp.push_back({local[a], local[b]});
        c.mesh = build_mesh(std::move(V), std::move(F), cp);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<std::vector<int>> boundary_loops(const TriMesh& mesh) {
    std::vector<int> outgoing(mesh.num_vertices(), -1);
    for (int e = 0; e < mesh.num_edges(); ++e)
        if (mesh.edges[e].is_boundary()) outgoing[mesh.edges[e].v0] = e;

    std::vector<char> used(mesh.num_edges(), 0);
    std::vector<std::vector<int>> loops;
    for (int e0 = 0; e0 < mesh.num_edges(); ++e0) {
        if (!mesh.edges[e0].is_boundary() || used[e0]) continue;
        std::vector<int> loop;
        int e = e0;
        while (e >= 0 && !used[e]) {
            used[e] = 1;
            loop.push_back(mesh.edges[e].v0);
            e = outgoing[mesh.edges[e].v1];
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

}  // namespace pqstrip
