#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pqstrip {

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Undirected edge. (v0, v1) follows the orientation of face f0; f1 is -1 on
/// the boundary. k0/k1 are the local edge slots inside f0/f1, where slot k of a
/// face joins corners k and (k+1)%3.
struct Edge {
    int v0 = -1;
    int v1 = -1;
    int f0 = -1;
    int f1 = -1;
    int k0 = -1;
    int k1 = -1;

    bool is_boundary() const { return f1 < 0; }
};

/// Faces around one vertex in counter-clockwise order. `faces[i]` and
/// `faces[i+1]` share the edge (v, F(faces[i], corner+2)). For a boundary
/// vertex the fan is open and starts at the face whose clockwise side is the
/// boundary.
struct VertexRing {
    std::vector<int> faces;
    std::vector<int> corners;
    bool closed = false;
};

/// Oriented, edge- and vertex-manifold triangle mesh with boundary and crease
/// markup. Immutable once built; use build_mesh or one of the transforming
/// functions below to obtain a new one.
struct TriMesh {
    Eigen::MatrixX3d V;
    Eigen::MatrixX3i F;

    std::vector<Edge> edges;
    Eigen::MatrixX3i FE;  // FE(f,k): edge joining corners k and k+1
    std::vector<VertexRing> rings;

    std::vector<char> boundary_vertex;
    std::vector<char> crease_edge;
    std::vector<char> crease_vertex;
    std::vector<char> boundary_face;
    std::vector<char> crease_face;

    int num_vertices() const { return static_cast<int>(V.rows()); }
    int num_faces() const { return static_cast<int>(F.rows()); }
    int num_edges() const { return static_cast<int>(edges.size()); }

    /// Edge index joining a and b, or -1.
    int find_edge(int a, int b) const;
    /// Face across edge slot k of f, or -1.
    int neighbor(int f, int k) const;
    std::vector<int> crease_edge_list() const;
    Eigen::Vector3d face_normal(int f) const;  // unit
    double face_area(int f) const;
    Eigen::Vector3d barycenter(int f) const;
    double mean_edge_length() const;
};

using VertexPair = std::pair<int, int>;

/// Builds connectivity and derived sets. Rejects non-manifold input,
/// inconsistent orientation and crease pairs that are not mesh edges.
TriMesh build_mesh(Eigen::MatrixX3d V, Eigen::MatrixX3i F, const std::vector<VertexPair>& crease_pairs = {});

/// Same geometry and connectivity, new crease set (edge indices).
TriMesh with_crease_edges(const TriMesh& mesh, const std::vector<int>& crease_edges);

struct PolygonSoup {
    Eigen::MatrixX3d V;
    std::vector<std::vector<int>> faces;
    std::vector<std::string> comments;
};

PolygonSoup read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const Eigen::MatrixX3d& V,
               const std::vector<std::vector<int>>& faces, const std::vector<std::string>& header = {});

/// Plain text, one "i j" pair of 0-based vertex indices per line; '#' comments.
std::vector<VertexPair> read_crease_file(const std::filesystem::path& path);
void write_crease_file(const std::filesystem::path& path, const TriMesh& mesh);

/// Loads a triangle OBJ. With `fan_triangulate`, polygons are split by a new
/// centroid vertex instead of being rejected.
TriMesh load_mesh(const std::filesystem::path& path, const std::optional<std::filesystem::path>& crease_path = {},
                  bool fan_triangulate = false);
void save_mesh(const std::filesystem::path& path, const TriMesh& mesh);

/// Scales (about the bbox minimum corner) to unit bbox diagonal. Returns the
/// scale factor that was applied.
double normalize_bbox(TriMesh& mesh);
double bbox_diagonal(const Eigen::MatrixX3d& V);

/// 2*pi minus the sum of incident corner angles (pi minus it on the boundary).
Eigen::VectorXd angle_defects(const TriMesh& mesh);

/// Interior, non-crease vertices whose absolute angle defect exceeds threshold.
std::vector<int> detect_apexes(const TriMesh& mesh, double defect_threshold);

/// Removes the listed apex vertices (skipping crease vertices) and their
/// incident faces. Unreferenced vertices are dropped.
TriMesh remove_apexes(const TriMesh& mesh, const std::vector<int>& apexes);

struct ApexOptions {
    std::vector<int> explicit_apexes;
    bool auto_detect = false;
    double defect_threshold = 0.2;
};
TriMesh preprocess_apexes(const TriMesh& mesh, const ApexOptions& options);

/// Interior edges whose unsigned dihedral deviation from flat exceeds
/// threshold (radians, in (0, pi)).
std::vector<int> detect_creases(const TriMesh& mesh, double dihedral_threshold);

/// Cuts every crease component that ends at an interior vertex open so that
/// its edges become boundary. Other creases are kept.
TriMesh split_open_creases(const TriMesh& mesh);

struct MeshComponent {
    TriMesh mesh;
    std::vector<int> vertex_map;  // local -> parent vertex
    std::vector<int> face_map;    // local -> parent face
};
std::vector<MeshComponent> split_components(const TriMesh& mesh);

/// Boundary loops as vertex sequences, oriented with the mesh on the left.
std::vector<std::vector<int>> boundary_loops(const TriMesh& mesh);

}  // namespace pqstrip
