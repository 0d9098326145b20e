#include "mdkit/train/metrics.hpp"

#include "mdkit/body/kinematics.hpp"
#include "mdkit/error.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mdkit::train {

FrameErrors path_pose_error(const body::Skeleton& skeleton, const MatX& Y_hat, const MatX& Y) {
  if (Y_hat.cols() != Y.cols()) {
    fail(ErrorCode::LengthMismatch, "forecast has " + std::to_string(Y_hat.cols()) + " frames, reference has " +
                                        std::to_string(Y.cols()));
  }
  if (Y_hat.rows() != skeleton.pose_dim() || Y.rows() != skeleton.pose_dim()) {
    fail(ErrorCode::DimensionMismatch, "pose size does not match the skeleton");
  }
  FrameErrors e;
  e.path.resize(Y.cols());
  e.pose.resize(Y.cols());
  for (Eigen::Index u = 0; u < Y.cols(); ++u) {
    e.path[u] = 1000.0 * (Y_hat.col(u).head<3>() - Y.col(u).head<3>()).norm();
    const Points a = body::local_joint_positions(skeleton, body::Pose(VecX(Y_hat.col(u))));
    const Points b = body::local_joint_positions(skeleton, body::Pose(VecX(Y.col(u))));
    e.pose[u] = 1000.0 * (a - b).rowwise().norm().mean();
  }
  return e;
}

Metrics summarize(const std::vector<FrameErrors>& errors, double fps, const std::vector<double>& horizons) {
  Metrics m;
  m.sequences = static_cast<int>(errors.size());
  if (errors.empty()) return m;
  const Eigen::Index U = errors.front().path.size();
  VecX path = VecX::Zero(U), pose = VecX::Zero(U);
  for (const auto& e : errors) {
    if (e.path.size() != U) fail(ErrorCode::LengthMismatch, "sequences have different forecast lengths");
    path += e.path;
    pose += e.pose;
  }
  path /= static_cast<double>(errors.size());
  pose /= static_cast<double>(errors.size());
  for (double h : horizons) {
    const long frame = std::lround(h * fps);
    if (frame < 1 || frame > U) continue;
    m.horizons.push_back(h);
    m.path.push_back(path[frame - 1]);
    m.pose.push_back(pose[frame - 1]);
  }
  m.path_mean = path.mean();
  m.pose_mean = pose.mean();
  return m;
}

namespace {

std::string horizon_label(double h) {
  std::ostringstream os;
  os << h << "s";
  return os.str();
}

} // namespace

void write_metrics_csv(const std::vector<std::pair<std::string, Metrics>>& rows, std::ostream& out) {
  out << "variant,metric,horizon,value_mm\n";
  out << std::setprecision(17);
  for (const auto& [name, m] : rows) {
    for (std::size_t i = 0; i < m.horizons.size(); ++i) out << name << ",path," << horizon_label(m.horizons[i]) << "," << m.path[i] << "\n";
    out << name << ",path,mean," << m.path_mean << "\n";
    for (std::size_t i = 0; i < m.horizons.size(); ++i) out << name << ",pose," << horizon_label(m.horizons[i]) << "," << m.pose[i] << "\n";
    out << name << ",pose,mean," << m.pose_mean << "\n";
  }
}

void print_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows, std::ostream& out) {
  if (rows.empty()) return;
  std::size_t name_width = 7;
  for (const auto& r : rows) name_width = std::max(name_width, r.first.size());
  const auto& hs = rows.front().second.horizons;
  const int col = 9;
  const int group = col * static_cast<int>(hs.size() + 1);
  out << std::left << std::setw(static_cast<int>(name_width)) << "" << " | " << std::setw(group) << "Path Error (mm)"
      << " | " << "Pose Error (mm)" << "\n";
  out << std::setw(static_cast<int>(name_width)) << "Variant" << " | ";
  for (int part = 0; part < 2; ++part) {
    for (double h : hs) out << std::right << std::setw(col) << horizon_label(h);
    out << std::setw(col) << "mean" << (part == 0 ? " | " : "\n");
  }
  out << std::fixed << std::setprecision(1);
  for (const auto& [name, m] : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << name << " | " << std::right;
    for (double v : m.path) out << std::setw(col) << v;
    out << std::setw(col) << m.path_mean << " | ";
    for (double v : m.pose) out << std::setw(col) << v;
    out << std::setw(col) << m.pose_mean << "\n";
  }
  out.unsetf(std::ios::fixed);
}

} // namespace mdkit::train
