#pragma once

#include "mdkit/types.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace mdkit::geometry {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  Vec3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }
  std::size_t size() const { return triangles.size(); }
};

// Throws EmptyMesh or DegenerateTriangle (zero area or index out of range).
void validate(const TriangleMesh& mesh);

// Every undirected edge is shared by exactly two triangles.
bool is_watertight(const TriangleMesh& mesh);
void require_watertight(const TriangleMesh& mesh);

// Concatenates meshes; vertex indices of later parts are offset.
void append(TriangleMesh& into, const TriangleMesh& part);
TriangleMesh translated(const TriangleMesh& mesh, const Vec3& offset);

Eigen::AlignedBox3d bounds(const TriangleMesh& mesh);

// Closed primitives with outward-facing, consistently wound triangles.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);
TriangleMesh make_cylinder(const Vec3& base_center, double radius, double height, int segments);
TriangleMesh make_icosphere(const Vec3& center, double radius, int subdivisions);

// Wavefront OBJ, `v` and `f` records only. Polygons are fan-triangulated.
TriangleMesh read_obj(const std::filesystem::path& path);
void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

} // namespace mdkit::geometry
