#pragma once

#include "mdkit/types.hpp"

#include <vector>

namespace mdkit::distance {

// Static kd-style bounding-box tree over a point set for nearest and
// within-radius queries. Distances are computed exactly as the brute-force
// loop does, so results match it bit for bit.
class PointIndex {
 public:
  explicit PointIndex(const Points& points, int leaf_size = 16);

  struct Nearest {
    double distance = 0.0;
    int index = -1;
  };
  Nearest nearest(const Vec3& q) const;

  // Indices (ascending) of all points with distance <= radius.
  std::vector<int> within(const Vec3& q, double radius) const;

  const Points& points() const { return points_; }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1, right = -1, begin = 0, end = 0;
  };
  int build(int begin, int end, int leaf_size);

  Points points_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
};

} // namespace mdkit::distance
