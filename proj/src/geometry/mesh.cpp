#include "mdkit/geometry/mesh.hpp"

#include "mdkit/error.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

namespace mdkit::geometry {

void validate(const TriangleMesh& mesh) {
  if (mesh.triangles.empty() || mesh.vertices.empty()) {
    fail(ErrorCode::EmptyMesh, "mesh has no triangles");
  }
  const int nv = static_cast<int>(mesh.vertices.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int idx : mesh.triangles[t]) {
      if (idx < 0 || idx >= nv) {
        fail(ErrorCode::DegenerateTriangle,
             "triangle " + std::to_string(t) + " references vertex " + std::to_string(idx));
      }
    }
    const Vec3 a = mesh.corner(t, 0);
    const Vec3 e1 = mesh.corner(t, 1) - a;
    const Vec3 e2 = mesh.corner(t, 2) - a;
    const double scale = std::max(e1.squaredNorm(), e2.squaredNorm());
    if (scale == 0.0 || e1.cross(e2).norm() <= 1e-12 * scale) {
      fail(ErrorCode::DegenerateTriangle, "triangle " + std::to_string(t) + " has zero area");
    }
  }
}

bool is_watertight(const TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k];
      int b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_use[{a, b}];
    }
  }
  for (const auto& [edge, count] : edge_use) {
    if (count != 2) return false;
  }
  return !mesh.triangles.empty();
}

void require_watertight(const TriangleMesh& mesh) {
  if (!is_watertight(mesh)) {
    fail(ErrorCode::NonWatertightMesh, "some edge is not shared by exactly two triangles");
  }
}

void append(TriangleMesh& into, const TriangleMesh& part) {
  const int offset = static_cast<int>(into.vertices.size());
  into.vertices.insert(into.vertices.end(), part.vertices.begin(), part.vertices.end());
  for (const auto& tri : part.triangles) {
    into.triangles.push_back({tri[0] + offset, tri[1] + offset, tri[2] + offset});
  }
}

TriangleMesh translated(const TriangleMesh& mesh, const Vec3& offset) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v += offset;
  return out;
}

Eigen::AlignedBox3d bounds(const TriangleMesh& mesh) {
  Eigen::AlignedBox3d box;
  for (const auto& v : mesh.vertices) box.extend(v);
  return box;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                            (i & 4) ? hi.z() : lo.z());
  }
  // Two triangles per face, counter-clockwise seen from outside.
  m.triangles = {{0, 2, 1}, {1, 2, 3},  // z = lo
                 {4, 5, 6}, {5, 7, 6},  // z = hi
                 {0, 1, 4}, {1, 5, 4},  // y = lo
                 {2, 6, 3}, {3, 6, 7},  // y = hi
                 {0, 4, 2}, {2, 4, 6},  // x = lo
                 {1, 3, 5}, {3, 7, 5}}; // x = hi
  return m;
}

TriangleMesh make_cylinder(const Vec3& base_center, double radius, double height, int segments) {
  TriangleMesh m;
  const int n = std::max(segments, 3);
  for (int ring = 0; ring < 2; ++ring) {
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * std::numbers::pi * i / n;
      m.vertices.push_back(base_center +
                           Vec3(radius * std::cos(a), radius * std::sin(a), ring * height));
    }
  }
  const int bottom = static_cast<int>(m.vertices.size());
  m.vertices.push_back(base_center);
  const int top = bottom + 1;
  m.vertices.push_back(base_center + Vec3(0, 0, height));
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    m.triangles.push_back({i, j, n + i});
    m.triangles.push_back({j, n + j, n + i});
    m.triangles.push_back({bottom, j, i});
    m.triangles.push_back({top, n + i, n + j});
  }
  return m;
}

TriangleMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      const int a = mid(t[0], t[1]);
      const int b = mid(t[1], t[2]);
      const int c = mid(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    tris = std::move(next);
  }
  TriangleMesh m;
  m.triangles = std::move(tris);
  for (const auto& v : verts) m.vertices.push_back(center + radius * v);
  return m;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  TriangleMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        fail(ErrorCode::FormatError, path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string token;
      while (ss >> token) {
        const int raw = std::stoi(token.substr(0, token.find('/')));
        const int count = static_cast<int>(mesh.vertices.size());
        poly.push_back(raw < 0 ? count + raw : raw - 1);
      }
      if (poly.size() < 3) {
        fail(ErrorCode::FormatError, path.string() + ":" + std::to_string(line_no) + ": face needs 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
      }
    }
  }
  return mesh;
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

} // namespace mdkit::geometry
