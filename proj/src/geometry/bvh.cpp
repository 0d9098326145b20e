#include "mdkit/geometry/bvh.hpp"

#include "mdkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mdkit::geometry {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

Bvh::Bvh(const TriangleMesh& mesh, int leaf_size) {
  validate(mesh);
  const int n = static_cast<int>(mesh.triangles.size());
  corners_.reserve(n);
  std::vector<Vec3> centroids(n);
  for (int t = 0; t < n; ++t) {
    corners_.push_back({mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)});
    centroids[t] = (corners_[t][0] + corners_[t][1] + corners_[t][2]) / 3.0;
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * n);
  build(0, n, std::max(leaf_size, 1), centroids);
}

int Bvh::build(int begin, int end, int leaf_size, const std::vector<Vec3>& centroids) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d centroid_box;
  for (int i = begin; i < end; ++i) {
    for (const auto& v : corners_[order_[i]]) box.extend(v);
    centroid_box.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  nodes_[index].begin = begin;
  nodes_[index].end = end;
  if (end - begin <= leaf_size) return index;

  int axis = 0;
  centroid_box.sizes().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     if (centroids[a][axis] != centroids[b][axis]) {
                       return centroids[a][axis] < centroids[b][axis];
                     }
                     return a < b;
                   });
  const int left = build(begin, mid, leaf_size, centroids);
  const int right = build(mid, end, leaf_size, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

ClosestPoint Bvh::closest(const Vec3& q) const {
  double best_sq = std::numeric_limits<double>::infinity();
  int best_tri = -1;
  Vec3 best_point = Vec3::Zero();

  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squaredExteriorDistance(q) > best_sq) continue;
    if (node.leaf()) {
      for (int i = node.begin; i < node.end; ++i) {
        const int tri = order_[i];
        const auto& c = corners_[tri];
        const Vec3 p = closest_point_on_triangle(q, c[0], c[1], c[2]);
        const double d_sq = (p - q).squaredNorm();
        if (d_sq < best_sq || (d_sq == best_sq && tri < best_tri)) {
          best_sq = d_sq;
          best_tri = tri;
          best_point = p;
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squaredExteriorDistance(q);
    const double dr = nodes_[node.right].box.squaredExteriorDistance(q);
    // Visit the nearer child first.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return {std::sqrt(best_sq), best_point, best_tri};
}

namespace {

bool ray_hits_box(const Eigen::AlignedBox3d& box, const Vec3& origin, const Vec3& inv_dir) {
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.min()[a] - origin[a]) * inv_dir[a];
    double t1 = (box.max()[a] - origin[a]) * inv_dir[a];
    if (std::isnan(t0) || std::isnan(t1)) {
      // Ray parallel to the slab and starting on its boundary plane.
      if (origin[a] < box.min()[a] || origin[a] > box.max()[a]) return false;
      continue;
    }
    if (t0 > t1) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
    if (t_min > t_max) return false;
  }
  return true;
}

} // namespace

Bvh::RayHits Bvh::intersect_ray(const Vec3& origin, const Vec3& dir) const {
  constexpr double kBaryEps = 1e-10;
  RayHits hits;
  const Vec3 inv_dir = dir.cwiseInverse();
  const double dir_norm = dir.norm();

  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    // Slightly inflated box so hits exactly on a box face are not lost.
    Eigen::AlignedBox3d box = node.box;
    const Vec3 pad = Vec3::Constant(1e-9 * (1.0 + box.sizes().maxCoeff()));
    box.min() -= pad;
    box.max() += pad;
    if (!ray_hits_box(box, origin, inv_dir)) continue;
    if (!node.leaf()) {
      stack.push_back(node.left);
      stack.push_back(node.right);
      continue;
    }
    for (int i = node.begin; i < node.end; ++i) {
      const auto& c = corners_[order_[i]];
      const Vec3 e1 = c[1] - c[0];
      const Vec3 e2 = c[2] - c[0];
      const Vec3 pvec = dir.cross(e2);
      const double det = e1.dot(pvec);
      const double scale = e1.norm() * e2.norm() * dir_norm;
      const Vec3 tvec = origin - c[0];
      if (std::abs(det) <= 1e-12 * scale) {
        // Ray parallel to the triangle plane; only a problem if it lies in it.
        const Vec3 normal = e1.cross(e2);
        if (std::abs(normal.dot(tvec)) <= 1e-12 * normal.norm() * (1.0 + tvec.norm())) {
          hits.grazing = true;
        }
        continue;
      }
      const double inv_det = 1.0 / det;
      const double u = tvec.dot(pvec) * inv_det;
      if (u < -kBaryEps || u > 1.0 + kBaryEps) continue;
      const Vec3 qvec = tvec.cross(e1);
      const double v = dir.dot(qvec) * inv_det;
      if (v < -kBaryEps || u + v > 1.0 + kBaryEps) continue;
      const double t = e2.dot(qvec) * inv_det;
      const double t_eps = 1e-12 * (1.0 + tvec.norm()) / std::max(dir_norm, 1e-300);
      if (std::abs(t) <= t_eps) {
        hits.on_surface = true;
        continue;
      }
      if (t < 0.0) continue;
      if (u < kBaryEps || v < kBaryEps || u + v > 1.0 - kBaryEps) {
        hits.grazing = true;
        continue;
      }
      hits.t.push_back(t);
    }
  }
  std::sort(hits.t.begin(), hits.t.end());
  return hits;
}

ClosestPoint closest_surface_point(const Bvh& bvh, const Vec3& q) { return bvh.closest(q); }

ClosestPoint closest_surface_point_brute_force(const TriangleMesh& mesh, const Vec3& q) {
  ClosestPoint best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 p = closest_point_on_triangle(q, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    const double d_sq = (p - q).squaredNorm();
    if (d_sq < best_sq) {
      best_sq = d_sq;
      best.point = p;
      best.triangle = static_cast<int>(t);
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

Vec3 sign_ray_direction(int attempt) {
  if (attempt == 0) return Vec3::UnitX();
  // Low-discrepancy jitter around +x; fixed sequence keeps results reproducible.
  const double a = std::fmod(attempt * 0.6180339887498949, 1.0) - 0.5;
  const double b = std::fmod(attempt * 0.7548776662466927, 1.0) - 0.5;
  return Vec3(1.0, 0.37 * a, 0.29 * b).normalized();
}

int point_sign(const TriangleMesh& mesh, const Bvh& bvh, const Vec3& q) {
  require_watertight(mesh);
  for (int attempt = 0; attempt <= kMaxSignRetries; ++attempt) {
    const auto hits = bvh.intersect_ray(q, sign_ray_direction(attempt));
    if (hits.on_surface) return +1;
    if (hits.grazing) continue;
    return hits.t.size() % 2 == 1 ? -1 : +1;
  }
  fail(ErrorCode::SignUndecidable, "ray parity ambiguous after retries");
}

} // namespace mdkit::geometry
