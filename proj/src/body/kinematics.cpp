#include "mdkit/body/kinematics.hpp"

#include "mdkit/error.hpp"

#include <cmath>
#include <numbers>

namespace mdkit::body {

namespace {

void check_dim(const Skeleton& skeleton, const Pose& pose) {
  if (pose.dim() != skeleton.pose_dim()) {
    fail(ErrorCode::DimensionMismatch, "pose has " + std::to_string(pose.dim()) + " entries, skeleton needs " +
                                           std::to_string(skeleton.pose_dim()));
  }
}

constexpr double kGoldenAngle = 2.399963229728653;

} // namespace

KinematicState forward_kinematics_state(const Skeleton& skeleton, const Pose& pose) {
  check_dim(skeleton, pose);
  const int J = skeleton.joint_count();
  KinematicState s;
  s.local.resize(J);
  s.rotation.resize(J);
  s.position.resize(J);
  s.local[0] = rot6d_to_matrix(pose.root_rotation());
  s.rotation[0] = s.local[0];
  s.position[0] = pose.translation();
  for (int j = 1; j < J; ++j) {
    const int p = skeleton.joints()[j].parent;
    s.local[j] = rot6d_to_matrix(pose.local_rotation(j));
    s.rotation[j] = s.rotation[p] * s.local[j];
    s.position[j] = s.position[p] + s.rotation[p] * skeleton.joints()[j].offset;
  }
  return s;
}

Points forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
  const auto s = forward_kinematics_state(skeleton, pose);
  Points out(skeleton.joint_count(), 3);
  for (int j = 0; j < skeleton.joint_count(); ++j) out.row(j) = s.position[j].transpose();
  return out;
}

std::vector<SurfaceAnchor> marker_anchors(const Skeleton& skeleton) {
  std::vector<SurfaceAnchor> anchors;
  anchors.reserve(skeleton.marker_count());
  for (const auto& m : skeleton.markers()) {
    const auto& f = skeleton.bone_frame(m.bone);
    const double r = skeleton.radii()[m.bone];
    const Vec3 offset = skeleton.joints()[skeleton.bone_child(m.bone)].offset;
    const Vec3 radial = std::cos(m.azimuth) * f.normal + std::sin(m.azimuth) * f.binormal;
    anchors.push_back({skeleton.bone_parent(m.bone), m.axial * offset + r * radial});
  }
  return anchors;
}

std::vector<SurfaceAnchor> surface_anchors(const Skeleton& skeleton, double density) {
  std::vector<SurfaceAnchor> anchors;
  for (int b = 0; b < skeleton.bone_count(); ++b) {
    const auto& f = skeleton.bone_frame(b);
    const double r = skeleton.radii()[b];
    const int parent = skeleton.bone_parent(b);
    const Vec3 offset = skeleton.joints()[skeleton.bone_child(b)].offset;
    const double area = skeleton.bone_area(b);
    const int total = static_cast<int>(std::lround(density * area));
    const double cyl_area = 2.0 * std::numbers::pi * r * f.length;
    const int n_cyl = f.length > 0.0 ? static_cast<int>(std::lround(total * cyl_area / area)) : 0;
    const int n_caps = total - n_cyl;
    const int n_start = n_caps / 2;
    const int n_end = n_caps - n_start;

    auto radial = [&](double phi) { return Vec3(std::cos(phi) * f.normal + std::sin(phi) * f.binormal); };
    for (int i = 0; i < n_cyl; ++i) {
      const double s = (i + 0.5) / n_cyl;
      anchors.push_back({parent, s * offset + r * radial(i * kGoldenAngle)});
    }
    auto hemisphere = [&](int n, const Vec3& center, const Vec3& pole) {
      for (int i = 0; i < n; ++i) {
        const double z = (i + 0.5) / n;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        anchors.push_back({parent, center + r * (z * pole + rho * radial(i * kGoldenAngle))});
      }
    };
    hemisphere(n_start, Vec3::Zero(), -f.axis);
    hemisphere(n_end, offset, f.axis);
  }
  return anchors;
}

Points place_anchors(const KinematicState& state, std::span<const SurfaceAnchor> anchors) {
  Points out(static_cast<Eigen::Index>(anchors.size()), 3);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto& a = anchors[i];
    out.row(static_cast<Eigen::Index>(i)) = (state.position[a.joint] + state.rotation[a.joint] * a.local).transpose();
  }
  return out;
}

Points marker_vertices(const Skeleton& skeleton, const Pose& pose) {
  const auto anchors = marker_anchors(skeleton);
  return place_anchors(forward_kinematics_state(skeleton, pose), anchors);
}

BodySurface body_surface_points(const Skeleton& skeleton, const Pose& pose, double density) {
  if (!(density > 0.0)) fail(ErrorCode::InvalidCount, "surface density must be positive");
  const auto anchors = surface_anchors(skeleton, density);
  return {place_anchors(forward_kinematics_state(skeleton, pose), anchors), density};
}

VecX anchors_vjp(const Skeleton& skeleton, const Pose& pose, const KinematicState& state,
                 std::span<const SurfaceAnchor> anchors, const Points& grad_points) {
  const int J = skeleton.joint_count();
  std::vector<Vec3> d_pos(J, Vec3::Zero());
  std::vector<Mat3> d_rot(J, Mat3::Zero());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Vec3 g = grad_points.row(static_cast<Eigen::Index>(i)).transpose();
    d_pos[anchors[i].joint] += g;
    d_rot[anchors[i].joint] += g * anchors[i].local.transpose();
  }

  VecX grad = VecX::Zero(pose.dim());
  for (int c = J - 1; c >= 1; --c) {
    const int p = skeleton.joints()[c].parent;
    // position[c] = position[p] + rotation[p] * offset[c]; rotation[c] = rotation[p] * local[c]
    d_pos[p] += d_pos[c];
    d_rot[p] += d_pos[c] * skeleton.joints()[c].offset.transpose() + d_rot[c] * state.local[c].transpose();
    const Mat3 d_local = state.rotation[p].transpose() * d_rot[c];
    grad.segment<6>(9 + 6 * (c - 1)) = rot6d_to_matrix_vjp(pose.local_rotation(c), d_local);
  }
  grad.head<3>() = d_pos[0];
  grad.segment<6>(3) = rot6d_to_matrix_vjp(pose.root_rotation(), d_rot[0]);
  return grad;
}

Points local_joint_positions(const Skeleton& skeleton, const Pose& pose) {
  Points joints = forward_kinematics(skeleton, pose);
  const Vec3 root = pose.translation();
  for (Eigen::Index j = 0; j < joints.rows(); ++j) joints.row(j) -= root.transpose();
  return joints;
}

} // namespace mdkit::body
