#include "mdkit/train/losses.hpp"

#include "mdkit/error.hpp"
#include "mdkit/nn/geometry_ops.hpp"

namespace mdkit::train {

using nn::Var;

namespace {

void require_shape(const MatX& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                       std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                                       std::to_string(cols));
  }
}

void check_dist_shapes(const MatX& D_hat, const MatX& B_hat, const MatX& D, const MatX& B) {
  require_shape(D_hat, D.rows(), D.cols(), "predicted vertex distances");
  require_shape(B_hat, B.rows(), B.cols(), "predicted basis distances");
  if (D.cols() != B.cols() || D.size() == 0 || B.size() == 0) {
    fail(ErrorCode::ShapeMismatch, "vertex and basis distances must share a non-empty frame count");
  }
}

} // namespace

double loss_dist(const MatX& D_hat, const MatX& B_hat, const MatX& D, const MatX& B) {
  check_dist_shapes(D_hat, B_hat, D, B);
  const double L = static_cast<double>(D.cols());
  return ((D_hat - D).cwiseAbs().sum() / static_cast<double>(D.rows()) +
          (B_hat - B).cwiseAbs().sum() / static_cast<double>(B.rows())) /
         L;
}

Var loss_dist(Var D_hat, Var B_hat, const MatX& D, const MatX& B) {
  check_dist_shapes(D_hat.value(), B_hat.value(), D, B);
  nn::Graph& g = *D_hat.graph;
  return add(nn::mean_abs(sub(D_hat, g.constant(D))), nn::mean_abs(sub(B_hat, g.constant(B))));
}

ConsistencyContext::ConsistencyContext(const geometry::SdfVolume& volume_, const Points& basis_,
                                       const body::Skeleton& skeleton_, double surface_density, double tau_)
    : volume(&volume_),
      basis(&basis_),
      skeleton(&skeleton_),
      markers(body::marker_anchors(skeleton_)),
      surface(body::surface_anchors(skeleton_, surface_density)),
      tau(tau_) {}

MatX basis_calibration(const MatX& Y, const MatX& B, const ConsistencyContext& ctx) {
  require_shape(B, ctx.basis->rows(), Y.cols(), "basis distance targets");
  MatX out(B.rows(), B.cols());
  for (Eigen::Index u = 0; u < Y.cols(); ++u) {
    const auto state = body::forward_kinematics_state(*ctx.skeleton, body::Pose(VecX(Y.col(u))));
    const Points pts = body::place_anchors(state, ctx.surface);
    out.col(u) = B.col(u) - nn::soft_min_distances(*ctx.basis, pts, ctx.tau);
  }
  return out;
}

double combine(const MotionComponents& c, const LossWeights& w) {
  return w.global * c.global + w.local * c.local + w.vertex * c.vertex + w.basis * c.basis;
}

MotionLoss loss_motion(nn::Graph& g, const std::vector<Var>& poses, const MatX& Y, const MatX& D, const MatX& B,
                       const ConsistencyContext& ctx, const LossWeights& w, const MatX* calibration) {
  const Eigen::Index U = static_cast<Eigen::Index>(poses.size());
  const Eigen::Index M = ctx.skeleton->pose_dim();
  if (U == 0) fail(ErrorCode::ShapeMismatch, "no predicted poses");
  require_shape(Y, M, U, "ground-truth poses");
  require_shape(D, ctx.skeleton->marker_count(), U, "vertex distance targets");
  require_shape(B, ctx.basis->rows(), U, "basis distance targets");

  Var Y_hat = nn::concat_cols(poses);
  require_shape(Y_hat.value(), M, U, "predicted poses");
  Var diff = sub(Y_hat, g.constant(Y));
  const double inv_u = 1.0 / static_cast<double>(U);
  Var global = nn::scale(nn::sum_abs(nn::slice_rows(diff, 0, 9)), inv_u);
  Var local = nn::scale(nn::sum_abs(nn::slice_rows(diff, 9, M - 9)), inv_u);
  Var total = add(nn::scale(global, w.global), nn::scale(local, w.local));

  MotionLoss out;
  out.values.global = global.scalar();
  out.values.local = local.scalar();

  if (w.vertex != 0.0) {
    std::vector<Var> cols;
    for (const Var& p : poses) cols.push_back(nn::sdf_sample(nn::pose_points(p, *ctx.skeleton, ctx.markers), *ctx.volume));
    Var vertex = nn::mean_abs(sub(nn::concat_cols(cols), g.constant(D)));
    out.values.vertex = vertex.scalar();
    total = add(total, nn::scale(vertex, w.vertex));
  }
  if (w.basis != 0.0) {
    MatX own;
    if (calibration == nullptr) {
      own = basis_calibration(Y, B, ctx);
      calibration = &own;
    }
    require_shape(*calibration, B.rows(), U, "basis calibration");
    std::vector<Var> cols;
    for (const Var& p : poses) {
      cols.push_back(nn::soft_min_distance(nn::pose_points(p, *ctx.skeleton, ctx.surface), *ctx.basis, ctx.tau));
    }
    Var basis = nn::mean_abs(sub(nn::concat_cols(cols), g.constant(B - *calibration)));
    out.values.basis = basis.scalar();
    total = add(total, nn::scale(basis, w.basis));
  }
  out.values.total = total.scalar();
  out.total = total;
  return out;
}

MotionComponents loss_motion(const MatX& Y_hat, const MatX& Y, const MatX& D, const MatX& B,
                             const ConsistencyContext& ctx, const LossWeights& weights) {
  nn::Graph g;
  std::vector<Var> poses;
  for (Eigen::Index u = 0; u < Y_hat.cols(); ++u) poses.push_back(g.constant(Y_hat.col(u)));
  return loss_motion(g, poses, Y, D, B, ctx, weights).values;
}

} // namespace mdkit::train
