#pragma once

#include "mdkit/body/rotation.hpp"
#include "mdkit/types.hpp"

#include <filesystem>
#include <vector>

namespace mdkit::body {

class Skeleton;

// Flat pose vector [t (3) | root 6-D (6) | local 6-D per non-root joint].
class Pose {
 public:
  Pose() = default;
  explicit Pose(VecX data) : data_(std::move(data)) {}
  // Identity rotations everywhere, root at `t`.
  static Pose rest(const Skeleton& skeleton, const Vec3& t = Vec3::Zero());

  const VecX& vector() const { return data_; }
  VecX& vector() { return data_; }
  int dim() const { return static_cast<int>(data_.size()); }
  int local_joint_count() const { return (dim() - 9) / 6; }

  Vec3 translation() const { return data_.head<3>(); }
  void set_translation(const Vec3& t) { data_.head<3>() = t; }
  Rot6 root_rotation() const { return data_.segment<6>(3); }
  void set_root_rotation(const Rot6& r) { data_.segment<6>(3) = r; }
  // Local rotation of joint j (j >= 1).
  Rot6 local_rotation(int joint) const { return data_.segment<6>(9 + 6 * (joint - 1)); }
  void set_local_rotation(int joint, const Rot6& r) { data_.segment<6>(9 + 6 * (joint - 1)) = r; }
  auto local_part() const { return data_.tail(dim() - 9); }

 private:
  VecX data_;
};

struct MotionSequence {
  std::vector<Pose> frames;
  double fps = 30.0;

  int length() const { return static_cast<int>(frames.size()); }
  int pose_dim() const { return frames.empty() ? 0 : frames.front().dim(); }
  // Frames [begin, begin + count).
  MotionSequence slice(int begin, int count) const;
  // M × L matrix, one pose per column.
  MatX matrix() const;
};

// Binary "MDMS" v1: magic, u32 version, u32 frames, u32 M, f32 fps, frames×M f32.
void write_mdms(const MotionSequence& motion, const std::filesystem::path& path);
MotionSequence read_mdms(const std::filesystem::path& path);

} // namespace mdkit::body
