#pragma once

#include "mdkit/body/pose.hpp"
#include "mdkit/body/skeleton.hpp"

#include <span>
#include <vector>

namespace mdkit::body {

struct KinematicState {
  std::vector<Mat3> local;     // local rotation per joint (root: global orientation)
  std::vector<Mat3> rotation;  // global rotation per joint
  std::vector<Vec3> position;  // global position per joint
};

KinematicState forward_kinematics_state(const Skeleton& skeleton, const Pose& pose);

// J × 3 joint positions.
Points forward_kinematics(const Skeleton& skeleton, const Pose& pose);

// A point rigidly attached to a joint frame: world = position[joint] + rotation[joint] * local.
struct SurfaceAnchor {
  int joint = 0;
  Vec3 local = Vec3::Zero();
};

std::vector<SurfaceAnchor> marker_anchors(const Skeleton& skeleton);

// Deterministic capsule sampling: a golden-angle spiral over each cylinder and
// Fibonacci hemispheres for the caps, round(density * area) points per capsule.
std::vector<SurfaceAnchor> surface_anchors(const Skeleton& skeleton, double density);

Points place_anchors(const KinematicState& state, std::span<const SurfaceAnchor> anchors);

// K × 3 marker positions v_t.
Points marker_vertices(const Skeleton& skeleton, const Pose& pose);

struct BodySurface {
  Points points;
  double density = 0.0;
};

BodySurface body_surface_points(const Skeleton& skeleton, const Pose& pose, double density);

// Vector-Jacobian product of place_anchors∘forward_kinematics with respect to
// the flat pose vector: returns dL/dpose for upstream dL/dpoints (N × 3).
VecX anchors_vjp(const Skeleton& skeleton, const Pose& pose, const KinematicState& state,
                 std::span<const SurfaceAnchor> anchors, const Points& grad_points);

// Root-relative joint positions (translation removed, orientation kept).
Points local_joint_positions(const Skeleton& skeleton, const Pose& pose);

} // namespace mdkit::body
