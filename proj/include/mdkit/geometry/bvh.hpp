#pragma once

#include "mdkit/geometry/mesh.hpp"

#include <vector>

namespace mdkit::geometry {

struct ClosestPoint {
  double distance = 0.0;
  Vec3 point = Vec3::Zero();
  int triangle = -1;
};

// Exact closest point on a single triangle (Voronoi-region walk).
Vec3 closest_point_on_triangle(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c);

// Axis-aligned bounding-box tree over the triangles of a mesh. Holds a copy of
// the triangle corners so it stays valid independently of the source mesh.
class Bvh {
 public:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;   // child indices, -1 for leaves
    int right = -1;
    int begin = 0;   // leaf range into order()
    int end = 0;
    bool leaf() const { return left < 0; }
  };

  explicit Bvh(const TriangleMesh& mesh, int leaf_size = 4);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& order() const { return order_; }
  std::size_t triangle_count() const { return corners_.size(); }

  // Minimum point-to-triangle distance; ties go to the lowest triangle index.
  ClosestPoint closest(const Vec3& q) const;

  // Ray hits against all triangles, reported as ray parameters t > 0.
  // `grazing` is set when the ray touches an edge, vertex, or lies in a
  // triangle's plane, in which case the crossing count is unreliable.
  struct RayHits {
    std::vector<double> t;
    bool grazing = false;
    bool on_surface = false;
  };
  RayHits intersect_ray(const Vec3& origin, const Vec3& dir) const;

 private:
  int build(int begin, int end, int leaf_size, const std::vector<Vec3>& centroids);

  std::vector<std::array<Vec3, 3>> corners_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
};

ClosestPoint closest_surface_point(const Bvh& bvh, const Vec3& q);

// Exhaustive reference over all triangles, same tie rule as the tree query.
ClosestPoint closest_surface_point_brute_force(const TriangleMesh& mesh, const Vec3& q);

// -1 inside the solid, +1 outside (points on the surface report +1).
// Uses crossing parity along +x, retrying jittered directions on grazing hits.
int point_sign(const TriangleMesh& mesh, const Bvh& bvh, const Vec3& q);

// Ray direction used for the k-th attempt of point_sign (k = 0 is +x).
Vec3 sign_ray_direction(int attempt);

inline constexpr int kMaxSignRetries = 8;

} // namespace mdkit::geometry
