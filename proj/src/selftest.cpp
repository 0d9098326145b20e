#include "mdkit/selftest.hpp"

#include "mdkit/body/kinematics.hpp"
#include "mdkit/distance/mutual_distance.hpp"
#include "mdkit/geometry/bvh.hpp"
#include "mdkit/geometry/mesh.hpp"
#include "mdkit/nn/geometry_ops.hpp"
#include "mdkit/spectral/dct.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace mdkit::selftest {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double winding_number(const geometry::TriangleMesh& mesh, const Vec3& q) {
  double total = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Vec3 a = mesh.vertices[tri[0]] - q, b = mesh.vertices[tri[1]] - q, c = mesh.vertices[tri[2]] - q;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(a.dot(b.cross(c)), den);
  }
  return total / (4.0 * std::numbers::pi);
}

MatX random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  MatX m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

using Build = std::function<nn::Var(nn::Graph&, const std::vector<nn::Var>&)>;

// Worst relative error between backward() and centered differences.
double gradient_error(const Build& build, const std::vector<MatX>& inputs, double h = 1e-5) {
  nn::Graph g;
  std::vector<nn::Var> vars;
  for (const auto& m : inputs) vars.push_back(g.variable(m));
  g.backward(build(g, vars));
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const MatX analytic = g.grad(vars[k].id).size() ? g.grad(vars[k].id) : MatX::Zero(inputs[k].rows(), inputs[k].cols());
    MatX numeric(inputs[k].rows(), inputs[k].cols());
    std::vector<MatX> probe = inputs;
    for (Eigen::Index i = 0; i < probe[k].size(); ++i) {
      double& x = probe[k].data()[i];
      const double keep = x;
      double f[2];
      for (int s = 0; s < 2; ++s) {
        x = keep + (s == 0 ? h : -h);
        nn::Graph g2;
        std::vector<nn::Var> v2;
        for (const auto& m : probe) v2.push_back(g2.constant(m));
        f[s] = build(g2, v2).scalar();
      }
      x = keep;
      numeric.data()[i] = (f[0] - f[1]) / (2.0 * h);
    }
    const double scale = std::max(1e-6, numeric.cwiseAbs().maxCoeff());
    worst = std::max(worst, (analytic - numeric).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

nn::Var weighted_sum(nn::Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return nn::sum(nn::mul(out, out.graph->constant(random_matrix(out.rows(), out.cols(), rng))));
}

} // namespace

SuiteResult dct_suite() {
  std::mt19937_64 rng(1);
  double ortho = 0.0, round_trip = 0.0;
  for (int L = 1; L <= 90; ++L) {
    const MatX& C = spectral::dct_basis(L)->matrix();
    ortho = std::max(ortho, (C * C.transpose() - MatX::Identity(L, L)).cwiseAbs().maxCoeff());
    for (int r = 0; r < 12; ++r) {
      const VecX x = random_matrix(L, 1, rng, 10.0);
      round_trip = std::max(round_trip, (spectral::idct(spectral::dct(x)) - x).cwiseAbs().maxCoeff());
    }
  }
  const VecX ones = VecX::Ones(4);
  VecX expect = VecX::Zero(4);
  expect[0] = 2.0;
  const double constant = (spectral::dct(ones) - expect).cwiseAbs().maxCoeff();
  const bool ok = ortho < 1e-10 && round_trip < 1e-9 && constant < 1e-12;
  return {"dct", ok,
          "orthonormality " + fmt(ortho) + ", round trip " + fmt(round_trip) + ", constant input " + fmt(constant)};
}

SuiteResult bvh_suite() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double worst = 0.0;
  int disagreements = 0, queries = 0;
  for (int m = 0; m < 3; ++m) {
    geometry::TriangleMesh mesh = geometry::make_icosphere(Vec3(u(rng), u(rng), u(rng)) * 0.2, 0.6, 2);
    geometry::append(mesh, geometry::make_box(Vec3(0.8, -0.3, -0.2), Vec3(1.2 + 0.1 * m, 0.4, 0.5)));
    geometry::append(mesh, geometry::make_cylinder(Vec3(-1.0, 0.2, -0.6), 0.3, 0.9, 16));
    const geometry::Bvh bvh(mesh);
    for (int q = 0; q < 300; ++q, ++queries) {
      const Vec3 p(u(rng), u(rng), u(rng));
      const double fast = geometry::closest_surface_point(bvh, p).distance;
      const double slow = geometry::closest_surface_point_brute_force(mesh, p).distance;
      worst = std::max(worst, std::abs(fast - slow));
      const int oracle = winding_number(mesh, p) > 0.5 ? -1 : 1;
      if (geometry::point_sign(mesh, bvh, p) != oracle) ++disagreements;
    }
  }
  return {"bvh", worst < 1e-9 && disagreements == 0,
          std::to_string(queries) + " queries, max distance error " + fmt(worst) + ", sign disagreements " +
              std::to_string(disagreements)};
}

SuiteResult gradient_suite() {
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::string, double>> errors;
  errors.emplace_back("matmul", gradient_error([](nn::Graph&, const std::vector<nn::Var>& v) {
    return weighted_sum(nn::matmul(v[0], v[1]), 1);
  }, {random_matrix(3, 4, rng), random_matrix(4, 2, rng)}));
  errors.emplace_back("tanh", gradient_error([](nn::Graph&, const std::vector<nn::Var>& v) {
    return weighted_sum(nn::tanh(v[0]), 2);
  }, {random_matrix(3, 3, rng)}));
  errors.emplace_back("conv3d", gradient_error([](nn::Graph&, const std::vector<nn::Var>& v) {
    return weighted_sum(nn::conv3d(v[0], 4, v[1], v[2], 2), 3);
  }, {random_matrix(2, 64, rng), random_matrix(3, 54, rng, 0.3), random_matrix(3, 1, rng)}));
  errors.emplace_back("gru_cell", gradient_error([](nn::Graph&, const std::vector<nn::Var>& v) {
    return weighted_sum(nn::gru_cell(v[0], v[1], v[2], v[3], v[4], v[5]), 4);
  }, {random_matrix(3, 1, rng), random_matrix(4, 1, rng), random_matrix(12, 3, rng), random_matrix(12, 4, rng),
      random_matrix(12, 1, rng), random_matrix(12, 1, rng)}));
  errors.emplace_back("gather", gradient_error([](nn::Graph&, const std::vector<nn::Var>& v) {
    return weighted_sum(nn::gather_cols(v[0], {2, 0, 2}), 5);
  }, {random_matrix(2, 4, rng)}));

  const auto mesh = geometry::make_box(Vec3(-2, -2, -1), Vec3(2, 2, 0));
  const auto volume = geometry::voxelize_sdf(mesh, geometry::GridSpec::around(Vec3(0, 0, 0.5), 1.0, 8));
  MatX pts = random_matrix(5, 3, rng, 0.6);
  pts.col(2).array() += 0.5;
  errors.emplace_back("sdf_sample", gradient_error([&](nn::Graph&, const std::vector<nn::Var>& v) {
    return weighted_sum(nn::sdf_sample(v[0], volume), 6);
  }, {pts}));
  const auto basis = distance::fibonacci_basis(6, 1.0);
  errors.emplace_back("soft_min", gradient_error([&](nn::Graph&, const std::vector<nn::Var>& v) {
    return weighted_sum(nn::soft_min_distance(v[0], basis.points, 0.05), 7);
  }, {random_matrix(20, 3, rng, 0.5)}));
  const auto skel = body::default_skeleton(6);
  const auto anchors = body::marker_anchors(skel);
  VecX pose = body::Pose::rest(skel, Vec3(0, 0, 0.9)).vector();
  pose += random_matrix(pose.size(), 1, rng, 0.05);
  errors.emplace_back("pose_points", gradient_error([&](nn::Graph&, const std::vector<nn::Var>& v) {
    return weighted_sum(nn::pose_points(v[0], skel, anchors), 8);
  }, {pose}));

  bool ok = true;
  std::string detail;
  for (const auto& [name, err] : errors) {
    ok = ok && err < 1e-4;
    detail += (detail.empty() ? "" : ", ") + name + " " + fmt(err);
  }
  return {"gradients", ok, detail};
}

std::vector<SuiteResult> run_all() { return {dct_suite(), bvh_suite(), gradient_suite()}; }

void print(const std::vector<SuiteResult>& results, std::ostream& out) {
  for (const auto& r : results) out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
}

} // namespace mdkit::selftest
