// Triangular meshes of the unit square with full face topology: oriented
// faces, element-face incidence with outward normals, and the geometric
// quantities (diameters, areas, centroid-face distances) needed by the
// local operators.
//
// Meshes are immutable after construction and safe for shared read access
// from concurrent element loops.

#ifndef HYNS_MESH_HPP
#define HYNS_MESH_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hyns {

using Vec2 = Eigen::Vector2d;

/// Structured triangulation patterns of the unit square.
enum class MeshPattern { Diagonal, Crisscross };

/// Incidence data of one face seen from one element.
struct ElementFace {
  int face = -1;      ///< global face index
  Vec2 normal;        ///< outward unit normal n_TF
  double sign = 1.0;  ///< n_TF = sign * (global face normal)
  double d_tf = 0.0;  ///< distance from the element centroid to the face line
};

struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise vertex ids
  std::vector<std::array<int, 2>> faces;      // vertex ids, lower id first

  std::vector<std::array<ElementFace, 3>> element_faces;  // per triangle
  std::vector<std::array<int, 2>> face_elements;  // incident elements, -1 if none
  std::vector<bool> boundary_face;

  std::vector<double> h_elem;      // element diameters h_T
  std::vector<double> area;        // |T| > 0
  std::vector<Vec2> centroid;      // x̄_T
  std::vector<double> face_length; // |F| = h_F
  std::vector<Vec2> face_midpoint;
  std::vector<Vec2> face_tangent;  // unit, oriented lower -> higher vertex id
  std::vector<Vec2> face_normal;   // unit, global orientation (tangent rotated -90°)

  int n_elements() const { return static_cast<int>(triangles.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_boundary_faces() const;

  /// Largest element diameter h = max_T h_T.
  double h() const;

  /// Vertex coordinates of element T.
  std::array<Vec2, 3> element_vertices(int T) const;
  /// Endpoints of face F, lower vertex id first.
  std::array<Vec2, 2> face_vertices(int F) const;

  /// Element across face F from element T, or -1 on the boundary.
  int neighbor(int T, int F) const;

  /// Inradius of element T (used by the regularity diagnostic h_T / rho_T).
  double inradius(int T) const;
};

/// Conforming triangulation of (0,1)² with n subdivisions per side.
/// Diagonal pattern: 2n² triangles; crisscross: 4n² (cell centers added).
/// Throws std::invalid_argument for n = 0.
Mesh build_structured_mesh(int n, MeshPattern pattern = MeshPattern::Diagonal);

/// Plain-text mesh format:
///   ns-mesh 2d
///   <n_vertices>
///   x y            (one per line)
///   <n_triangles>
///   i j k          (0-based, one per line)
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);
void write_mesh(const Mesh& mesh, std::ostream& out);

/// Rebuilds faces, incidence, normals and geometric quantities from
/// vertices + triangles. Called by the constructors above; exposed for
/// meshes assembled manually in tests. Throws on non-manifold topology
/// (a face with three or more incident elements) or non-positive areas.
void build_topology(Mesh& mesh);

}  // namespace hyns

#endif
