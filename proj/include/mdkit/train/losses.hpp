#pragma once

#include "mdkit/body/kinematics.hpp"
#include "mdkit/geometry/sdf.hpp"
#include "mdkit/nn/autodiff.hpp"

#include <vector>

namespace mdkit::train {

struct LossWeights {
  double global = 1.0;
  double local = 0.5;
  double vertex = 1.0;
  double basis = 1.0;
};

// (1/L)·[(1/K)·Σ|d̂ − d| + (1/P)·Σ|b̂ − b|] over K × L and P × L arrays.
double loss_dist(const MatX& D_hat, const MatX& B_hat, const MatX& D, const MatX& B);
nn::Var loss_dist(nn::Var D_hat, nn::Var B_hat, const MatX& D, const MatX& B);

struct MotionComponents {
  double global = 0.0;
  double local = 0.0;
  double vertex = 0.0;
  double basis = 0.0;
  double total = 0.0;
};

// Everything the consistency terms need besides the poses. Pointers must
// outlive the graph that uses them.
struct ConsistencyContext {
  const geometry::SdfVolume* volume = nullptr;
  const Points* basis = nullptr;
  const body::Skeleton* skeleton = nullptr;
  std::vector<body::SurfaceAnchor> markers;
  std::vector<body::SurfaceAnchor> surface;
  double tau = 0.01;

  ConsistencyContext(const geometry::SdfVolume& volume, const Points& basis, const body::Skeleton& skeleton,
                     double surface_density, double tau = 0.01);
};

// Offsets b − S_τ(ground-truth surface) per basis point and frame (P × U).
// Adding them to the smooth minimum of a predicted surface makes the basis
// term vanish exactly when the prediction equals the ground truth.
MatX basis_calibration(const MatX& Y, const MatX& B, const ConsistencyContext& ctx);

struct MotionLoss {
  nn::Var total;
  MotionComponents values;
};

// Y (M × U) ground-truth poses; D (K × U) and B (P × U) consistency targets.
// ℓ_global and ℓ_local sum absolute errors within a frame and average over
// frames; ℓ_vertex and ℓ_basis average over markers or basis points and
// frames. Terms with zero weight are skipped and reported as 0. When
// `calibration` is null it is computed from Y.
MotionLoss loss_motion(nn::Graph& graph, const std::vector<nn::Var>& poses, const MatX& Y, const MatX& D,
                       const MatX& B, const ConsistencyContext& ctx, const LossWeights& weights,
                       const MatX* calibration = nullptr);

// Value-only convenience over plain pose matrices.
MotionComponents loss_motion(const MatX& Y_hat, const MatX& Y, const MatX& D, const MatX& B,
                             const ConsistencyContext& ctx, const LossWeights& weights);

// λ-weighted sum of the four components.
double combine(const MotionComponents& c, const LossWeights& w);

} // namespace mdkit::train
