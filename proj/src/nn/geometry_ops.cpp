#include "mdkit/nn/geometry_ops.hpp"

#include "mdkit/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mdkit::nn {

namespace {

Points to_points(const MatX& m) {
  if (m.cols() != 3) fail(ErrorCode::ShapeMismatch, "expected an N x 3 point array");
  return m;
}

struct SoftMinTerms {
  VecX value;
  // Per basis point: contributing point indices and their softmax weights.
  std::vector<std::vector<int>> index;
  std::vector<std::vector<double>> weight;
};

SoftMinTerms soft_min_terms(const Points& basis, const Points& points, double tau, bool keep_terms) {
  if (points.rows() == 0) fail(ErrorCode::EmptySurface, "smooth minimum over an empty point set");
  if (!(tau > 0.0)) fail(ErrorCode::InvalidRadius, "temperature must be positive");
  // Squared distances via one product; only used to pick candidates, whose
  // distances are then recomputed exactly.
  const Eigen::MatrixXd B = basis, Y = points;
  Eigen::MatrixXd sq = -2.0 * B * Y.transpose();
  sq.colwise() += B.rowwise().squaredNorm();
  sq.rowwise() += Y.rowwise().squaredNorm().transpose();

  SoftMinTerms out;
  out.value.resize(basis.rows());
  if (keep_terms) {
    out.index.resize(basis.rows());
    out.weight.resize(basis.rows());
  }
  std::vector<int> cand;
  std::vector<double> dist;
  for (Eigen::Index p = 0; p < basis.rows(); ++p) {
    const Eigen::RowVector3d q = basis.row(p);
    const double approx_min = std::sqrt(std::max(0.0, sq.row(p).minCoeff()));
    const double reach = approx_min + kSoftMinWindow * tau + 1e-6;
    const double reach_sq = reach * reach;
    cand.clear();
    dist.clear();
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (sq(p, i) > reach_sq) continue;
      const double d = (points.row(i) - q).norm();
      cand.push_back(static_cast<int>(i));
      dist.push_back(d);
      m = std::min(m, d);
    }
    std::vector<int> kept;
    kept.reserve(cand.size());
    Eigen::ArrayXd shifted(static_cast<Eigen::Index>(cand.size()));
    Eigen::Index n = 0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (dist[k] > m + kSoftMinWindow * tau) continue;
      kept.push_back(cand[k]);
      shifted(n++) = -(dist[k] - m) / tau;
    }
    const Eigen::ArrayXd w = shifted.head(n).exp();
    const double total = w.sum();
    out.value(p) = m - tau * std::log(total);
    if (keep_terms) {
      out.index[p] = std::move(kept);
      out.weight[p].assign(w.data(), w.data() + n);
      for (double& wk : out.weight[p]) wk /= total;
    }
  }
  return out;
}

} // namespace

Var sdf_sample(Var points, const geometry::SdfVolume& volume) {
  const Points pts = to_points(points.value());
  MatX out(pts.rows(), 1);
  auto grads = std::make_shared<Points>(pts.rows(), 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    Vec3 g;
    out(i, 0) = geometry::sample_sdf(volume, pts.row(i).transpose(), &g);
    grads->row(i) = g.transpose();
  }
  const int ip = points.id;
  return points.graph->record(std::move(out), {ip}, [ip, grads](Graph& g, int self) {
    MatX& gp = g.grad_of(ip);
    const MatX& go = g.grad(self);
    for (Eigen::Index i = 0; i < gp.rows(); ++i) gp.row(i) += go(i, 0) * grads->row(i);
  });
}

Var pose_points(Var pose, const body::Skeleton& skeleton, std::span<const body::SurfaceAnchor> anchors) {
  if (pose.cols() != 1 || pose.rows() != skeleton.pose_dim()) fail(ErrorCode::ShapeMismatch, "pose vector has wrong size");
  auto p = std::make_shared<body::Pose>(VecX(pose.value().col(0)));
  auto state = std::make_shared<body::KinematicState>(body::forward_kinematics_state(skeleton, *p));
  auto kept = std::make_shared<std::vector<body::SurfaceAnchor>>(anchors.begin(), anchors.end());
  MatX out = body::place_anchors(*state, *kept);
  const body::Skeleton* skel = &skeleton;
  const int ip = pose.id;
  return pose.graph->record(std::move(out), {ip}, [=](Graph& g, int self) {
    const Points go = g.grad(self);
    g.grad_of(ip).col(0) += body::anchors_vjp(*skel, *p, *state, *kept, go);
  });
}

VecX soft_min_distances(const Points& basis, const Points& points, double tau) {
  return soft_min_terms(basis, points, tau, false).value;
}

Var soft_min_distance(Var points, const Points& basis, double tau) {
  const Points pts = to_points(points.value());
  auto terms = std::make_shared<SoftMinTerms>(soft_min_terms(basis, pts, tau, true));
  MatX out = terms->value;
  auto base = std::make_shared<Points>(basis);
  const int ip = points.id;
  return points.graph->record(std::move(out), {ip}, [ip, terms, base](Graph& g, int self) {
    MatX& gp = g.grad_of(ip);
    const MatX& pts = g.value(ip);
    const MatX& go = g.grad(self);
    for (Eigen::Index p = 0; p < base->rows(); ++p) {
      const auto& idx = terms->index[p];
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Eigen::RowVector3d diff = pts.row(idx[k]) - base->row(p);
        const double d = diff.norm();
        if (d < 1e-15) continue;
        gp.row(idx[k]) += go(p, 0) * terms->weight[p][k] / d * diff;
      }
    }
  });
}

} // namespace mdkit::nn
