#include "mdkit/distance/point_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mdkit::distance {

PointIndex::PointIndex(const Points& points, int leaf_size) : points_(points) {
  const int n = static_cast<int>(points_.rows());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  if (n > 0) build(0, n, std::max(leaf_size, 1));
}

int PointIndex::build(int begin, int end, int leaf_size) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  for (int i = begin; i < end; ++i) box.extend(Vec3(points_.row(order_[i]).transpose()));
  nodes_[index].box = box;
  nodes_[index].begin = begin;
  nodes_[index].end = end;
  if (end - begin <= leaf_size) return index;
  int axis = 0;
  box.sizes().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    if (points_(a, axis) != points_(b, axis)) return points_(a, axis) < points_(b, axis);
    return a < b;
  });
  const int left = build(begin, mid, leaf_size);
  const int right = build(mid, end, leaf_size);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

PointIndex::Nearest PointIndex::nearest(const Vec3& q) const {
  Nearest best;
  if (nodes_.empty()) return best;
  double best_sq = std::numeric_limits<double>::infinity();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.box.squaredExteriorDistance(q) > best_sq) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d_sq = (points_.row(idx).transpose() - q).squaredNorm();
        if (d_sq < best_sq || (d_sq == best_sq && idx < best.index)) {
          best_sq = d_sq;
          best.index = idx;
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squaredExteriorDistance(q);
    const double dr = nodes_[node.right].box.squaredExteriorDistance(q);
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

std::vector<int> PointIndex::within(const Vec3& q, double radius) const {
  std::vector<int> out;
  if (nodes_.empty()) return out;
  const double r_sq = radius * radius;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.box.squaredExteriorDistance(q) > r_sq) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        if ((points_.row(idx).transpose() - q).norm() <= radius) out.push_back(idx);
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace mdkit::distance
