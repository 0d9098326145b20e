#include "mdkit/distance/mutual_distance.hpp"

#include "mdkit/distance/point_index.hpp"
#include "mdkit/error.hpp"
#include "mdkit/io/binary.hpp"
#include "mdkit/parallel.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdkit::distance {

BasisSet fibonacci_basis(int count, double radius) {
  if (count < 1) fail(ErrorCode::InvalidCount, "basis needs at least one point");
  if (!(radius > 0.0)) fail(ErrorCode::InvalidRadius, "basis radius must be positive");
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  BasisSet basis;
  basis.radius = radius;
  basis.points.resize(count, 3);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    Vec3 p(r * std::cos(phi), r * std::sin(phi), z);
    basis.points.row(i) = (radius * p.normalized()).transpose();
  }
  return basis;
}

VecX per_vertex_signed_distance(const geometry::SdfVolume& volume, const Points& markers) {
  VecX d(markers.rows());
  for (Eigen::Index k = 0; k < markers.rows(); ++k) {
    d[k] = geometry::sample_sdf(volume, markers.row(k).transpose());
  }
  return d;
}

VecX per_basis_distance(const BasisSet& basis, const Points& surface_points) {
  if (surface_points.rows() == 0) fail(ErrorCode::EmptySurface, "body surface has no points");
  const PointIndex index(surface_points);
  VecX b(basis.size());
  for (int p = 0; p < basis.size(); ++p) b[p] = index.nearest(basis.points.row(p).transpose()).distance;
  return b;
}

VecX per_basis_distance(const BasisSet& basis, const body::BodySurface& surface) {
  return per_basis_distance(basis, surface.points);
}

DistanceSequence DistanceSequence::slice(int begin, int count) const {
  return {D.middleCols(begin, count), B.middleCols(begin, count)};
}

DistanceSequence sequence_distances(const geometry::SdfVolume& volume, const BasisSet& basis,
                                    const body::Skeleton& skeleton, const body::MotionSequence& motion,
                                    const DistanceOptions& options) {
  const int L = motion.length();
  DistanceSequence out{MatX(skeleton.marker_count(), L), MatX(basis.size(), L)};
  const auto markers = body::marker_anchors(skeleton);
  const auto surface = body::surface_anchors(skeleton, options.surface_density);
  parallel_for(L, options.jobs, [&](std::size_t t) {
    const auto state = body::forward_kinematics_state(skeleton, motion.frames[t]);
    out.D.col(t) = per_vertex_signed_distance(volume, body::place_anchors(state, markers));
    out.B.col(t) = per_basis_distance(basis, body::place_anchors(state, surface));
  });
  return out;
}

void write_distances_csv(const DistanceSequence& seq, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(9);
  out << "frame,kind,index,value\n";
  for (int t = 0; t < seq.length(); ++t) {
    for (Eigen::Index k = 0; k < seq.D.rows(); ++k) out << t << ",d," << k << ',' << seq.D(k, t) << '\n';
    for (Eigen::Index p = 0; p < seq.B.rows(); ++p) out << t << ",b," << p << ',' << seq.B(p, t) << '\n';
  }
}

void write_mdds(const DistanceSequence& seq, const std::filesystem::path& path) {
  io::BinaryWriter out(path);
  out.magic("MDDS");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(seq.length()));
  out.u32(static_cast<std::uint32_t>(seq.D.rows()));
  out.u32(static_cast<std::uint32_t>(seq.B.rows()));
  for (int t = 0; t < seq.length(); ++t) {
    for (Eigen::Index k = 0; k < seq.D.rows(); ++k) out.f32(static_cast<float>(seq.D(k, t)));
    for (Eigen::Index p = 0; p < seq.B.rows(); ++p) out.f32(static_cast<float>(seq.B(p, t)));
  }
  out.close();
}

DistanceSequence read_mdds(const std::filesystem::path& path) {
  io::BinaryReader in(path);
  in.expect_magic("MDDS");
  if (in.u32() != 1) fail(ErrorCode::FormatError, "unsupported MDDS version");
  const int L = static_cast<int>(in.u32());
  const int K = static_cast<int>(in.u32());
  const int P = static_cast<int>(in.u32());
  DistanceSequence seq{MatX(K, L), MatX(P, L)};
  for (int t = 0; t < L; ++t) {
    for (int k = 0; k < K; ++k) seq.D(k, t) = in.f32();
    for (int p = 0; p < P; ++p) seq.B(p, t) = in.f32();
  }
  in.expect_end();
  return seq;
}

void write_basis_csv(const BasisSet& basis, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  out << "index,x,y,z\n";
  for (int i = 0; i < basis.size(); ++i) {
    out << i << ',' << basis.points(i, 0) << ',' << basis.points(i, 1) << ',' << basis.points(i, 2) << '\n';
  }
}

BasisSet read_basis_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "index,x,y,z") fail(ErrorCode::FormatError, path.string() + ": bad header");
  std::vector<Vec3> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[4];
    for (auto& f : field) std::getline(row, f, ',');
    try {
      if (std::stoi(field[0]) != static_cast<int>(rows.size())) throw std::invalid_argument("index");
      rows.emplace_back(std::stod(field[1]), std::stod(field[2]), std::stod(field[3]));
    } catch (const std::exception&) {
      fail(ErrorCode::FormatError, path.string() + ": bad row " + std::to_string(rows.size() + 1));
    }
  }
  if (rows.empty()) fail(ErrorCode::InvalidCount, path.string() + ": no basis points");
  BasisSet basis;
  basis.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
  double norm = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    basis.points.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    norm += rows[i].norm();
  }
  basis.radius = norm / static_cast<double>(rows.size());
  return basis;
}

} // namespace mdkit::distance
