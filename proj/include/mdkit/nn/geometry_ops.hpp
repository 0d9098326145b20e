#pragma once

#include "mdkit/body/kinematics.hpp"
#include "mdkit/geometry/sdf.hpp"
#include "mdkit/nn/autodiff.hpp"

#include <memory>
#include <span>

namespace mdkit::nn {

// Trilinear SDF lookup at each row of `points` (N × 3) -> N × 1.
// The volume must outlive the graph.
Var sdf_sample(Var points, const geometry::SdfVolume& volume);

// Anchored body points (N × 3) of a flat pose vector (M × 1).
// The skeleton must outlive the graph.
Var pose_points(Var pose, const body::Skeleton& skeleton, std::span<const body::SurfaceAnchor> anchors);

// Candidates farther than the hard minimum plus this many temperatures are
// dropped from the log-sum-exp; their weight is below exp(-window).
inline constexpr double kSoftMinWindow = 12.0;

// Smooth minimum m - tau·log Σ exp(-(d_i - m)/tau) of the distances from
// every basis point to a point set, where m is the hard minimum.
VecX soft_min_distances(const Points& basis, const Points& points, double tau);

// Differentiable version with respect to `points` (N × 3) -> P × 1.
Var soft_min_distance(Var points, const Points& basis, double tau);

} // namespace mdkit::nn
