#pragma once

#include "mdkit/body/rotation.hpp"
#include "mdkit/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mdkit::body {

struct Joint {
  std::string name;
  int parent = -1;       // -1 for the root
  Vec3 offset = Vec3::Zero();  // rest offset from the parent, in the parent's frame
};

// Marker anchored on the capsule of `bone` (bone b spans parent(b+1) -> joint b+1).
struct Marker {
  int bone = 0;
  double axial = 0.5;    // 0 at the bone start, 1 at the bone end
  double azimuth = 0.0;  // radians around the bone axis from the reference normal
};

// Orthonormal frame of a bone's capsule, expressed in the parent joint's frame.
struct BoneFrame {
  Vec3 axis;
  Vec3 normal;    // reference normal, azimuth 0
  Vec3 binormal;  // axis x normal
  double length = 0.0;
};

// Articulated capsule body. Joint 0 is the root; parents precede children.
class Skeleton {
 public:
  Skeleton(std::vector<Joint> joints, std::vector<double> radii, std::vector<Marker> markers);

  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<Marker>& markers() const { return markers_; }

  int joint_count() const { return static_cast<int>(joints_.size()); }
  int bone_count() const { return joint_count() - 1; }
  int marker_count() const { return static_cast<int>(markers_.size()); }
  // Pose vector length: translation (3) + root 6-D (6) + 6 per non-root joint.
  int pose_dim() const { return 9 + 6 * bone_count(); }

  int bone_child(int bone) const { return bone + 1; }
  int bone_parent(int bone) const { return joints_[bone + 1].parent; }
  const BoneFrame& bone_frame(int bone) const { return frames_[bone]; }
  double bone_area(int bone) const;

  int find_joint(const std::string& name) const;

  Skeleton with_markers(std::vector<Marker> markers) const;

 private:
  std::vector<Joint> joints_;
  std::vector<double> radii_;
  std::vector<Marker> markers_;
  std::vector<BoneFrame> frames_;
};

// 16-joint capsule body (pelvis root, z up, facing +x, left +y) with
// `marker_count` markers spread over bones in proportion to capsule area.
Skeleton default_skeleton(int marker_count = 67);

// Markers distributed over bones by largest-remainder on capsule area.
std::vector<Marker> distribute_markers(const Skeleton& skeleton, int count);

// JSON: {"joints":[{"name","parent","offset":[x,y,z]}], "radii":[...], "markers":[{"bone","axial","azimuth"}]}
Skeleton read_skeleton_json(const std::filesystem::path& path);
void write_skeleton_json(const Skeleton& skeleton, const std::filesystem::path& path);
std::string skeleton_to_json(const Skeleton& skeleton);
Skeleton skeleton_from_json(const std::string& text);

} // namespace mdkit::body
