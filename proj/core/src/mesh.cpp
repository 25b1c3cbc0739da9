#include "hyns/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hyns {

int Mesh::n_boundary_faces() const {
  return static_cast<int>(std::count(boundary_face.begin(), boundary_face.end(), true));
}

double Mesh::h() const {
  return *std::max_element(h_elem.begin(), h_elem.end());
}

std::array<Vec2, 3> Mesh::element_vertices(int T) const {
  const auto& t = triangles[T];
  return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
}

std::array<Vec2, 2> Mesh::face_vertices(int F) const {
  return {vertices[faces[F][0]], vertices[faces[F][1]]};
}

int Mesh::neighbor(int T, int F) const {
  const auto& inc = face_elements[F];
  return inc[0] == T ? inc[1] : inc[0];
}

double Mesh::inradius(int T) const {
  // rho_T = 2|T| / perimeter for a triangle
  double perim = 0.0;
  for (const auto& ef : element_faces[T]) perim += face_length[ef.face];
  return 2.0 * area[T] / perim;
}

void build_topology(Mesh& mesh) {
  const int nT = mesh.n_elements();

  mesh.faces.clear();
  mesh.element_faces.assign(nT, {});
  mesh.face_elements.clear();

  // Deduplicate edges; key is the sorted vertex pair.
  std::map<std::pair<int, int>, int> face_id;
  for (int T = 0; T < nT; ++T) {
    const auto& tri = mesh.triangles[T];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      auto key = std::minmax(a, b);
      auto [it, inserted] = face_id.try_emplace(key, static_cast<int>(mesh.faces.size()));
      if (inserted) {
        mesh.faces.push_back({key.first, key.second});
        mesh.face_elements.push_back({-1, -1});
      }
      const int F = it->second;
      auto& inc = mesh.face_elements[F];
      if (inc[0] < 0) {
        inc[0] = T;
      } else if (inc[1] < 0) {
        inc[1] = T;
      } else {
        throw std::runtime_error("build_topology: non-manifold face (three incident elements)");
      }
      mesh.element_faces[T][e].face = F;
    }
  }

  const int nF = mesh.n_faces();
  mesh.boundary_face.assign(nF, false);
  mesh.face_length.resize(nF);
  mesh.face_midpoint.resize(nF);
  mesh.face_tangent.resize(nF);
  mesh.face_normal.resize(nF);
  for (int F = 0; F < nF; ++F) {
    mesh.boundary_face[F] = (mesh.face_elements[F][1] < 0);
    const Vec2 a = mesh.vertices[mesh.faces[F][0]];
    const Vec2 b = mesh.vertices[mesh.faces[F][1]];
    mesh.face_length[F] = (b - a).norm();
    mesh.face_midpoint[F] = 0.5 * (a + b);
    mesh.face_tangent[F] = (b - a) / mesh.face_length[F];
    // Global normal: tangent rotated by -90°, fixed by the lower->higher
    // vertex orientation so that face data is element-independent.
    mesh.face_normal[F] = Vec2(mesh.face_tangent[F].y(), -mesh.face_tangent[F].x());
  }

  mesh.h_elem.resize(nT);
  mesh.area.resize(nT);
  mesh.centroid.resize(nT);
  for (int T = 0; T < nT; ++T) {
    const auto v = mesh.element_vertices(T);
    const double two_area =
        (v[1].x() - v[0].x()) * (v[2].y() - v[0].y()) - (v[2].x() - v[0].x()) * (v[1].y() - v[0].y());
    if (two_area <= 0.0)
      throw std::runtime_error("build_topology: non-positive element area (check vertex order)");
    mesh.area[T] = 0.5 * two_area;
    mesh.centroid[T] = (v[0] + v[1] + v[2]) / 3.0;
    mesh.h_elem[T] = std::max({(v[1] - v[0]).norm(), (v[2] - v[1]).norm(), (v[0] - v[2]).norm()});

    for (auto& ef : mesh.element_faces[T]) {
      const int F = ef.face;
      const Vec2 n = mesh.face_normal[F];
      const Vec2 to_face = mesh.face_midpoint[F] - mesh.centroid[T];
      ef.sign = (to_face.dot(n) > 0.0) ? 1.0 : -1.0;
      ef.normal = ef.sign * n;
      ef.d_tf = std::abs(to_face.dot(n));
    }
  }
}

Mesh build_structured_mesh(int n, MeshPattern pattern) {
  if (n < 1) throw std::invalid_argument("build_structured_mesh: n must be >= 1");

  Mesh mesh;
  const double dx = 1.0 / n;
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };

  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) mesh.vertices.emplace_back(i * dx, j * dx);

  if (pattern == MeshPattern::Diagonal) {
    // Each cell split by the diagonal from (i,j) to (i+1,j+1).
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      }
  } else {
    // Four triangles per cell around the cell center.
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        mesh.vertices.emplace_back((i + 0.5) * dx, (j + 0.5) * dx);
        int c = static_cast<int>(mesh.vertices.size()) - 1;
        int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
        mesh.triangles.push_back({v00, v10, c});
        mesh.triangles.push_back({v10, v11, c});
        mesh.triangles.push_back({v11, v01, c});
        mesh.triangles.push_back({v01, v00, c});
      }
  }

  build_topology(mesh);
  return mesh;
}

Mesh read_mesh(std::istream& in) {
  std::string tag, dim;
  in >> tag >> dim;
  if (tag != "ns-mesh" || dim != "2d")
    throw std::runtime_error("read_mesh: expected header 'ns-mesh 2d'");

  Mesh mesh;
  int nv = 0, nt = 0;
  in >> nv;
  if (!in || nv <= 0) throw std::runtime_error("read_mesh: bad vertex count");
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices) in >> v.x() >> v.y();
  in >> nt;
  if (!in || nt <= 0) throw std::runtime_error("read_mesh: bad triangle count");
  mesh.triangles.resize(nt);
  for (auto& t : mesh.triangles) in >> t[0] >> t[1] >> t[2];
  if (!in) throw std::runtime_error("read_mesh: truncated file");

  build_topology(mesh);
  return mesh;
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_mesh_file: cannot open " + path);
  return read_mesh(in);
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "ns-mesh 2d\n" << mesh.n_vertices() << "\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << " " << v.y() << "\n";
  out << mesh.n_elements() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
}

}  // namespace hyns
