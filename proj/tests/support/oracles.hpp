#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include "mdkit/geometry/mesh.hpp"
#include "mdkit/types.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace mdkit::testing {

// Generalised winding number (sum of signed solid angles / 4pi).
inline double winding_number(const geometry::TriangleMesh& mesh, const Vec3& q) {
  double total = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Vec3 a = mesh.vertices[tri[0]] - q;
    const Vec3 b = mesh.vertices[tri[1]] - q;
    const Vec3 c = mesh.vertices[tri[2]] - q;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

// Point-to-segment distance, used for capsule oracles.
inline double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len_sq = ab.squaredNorm();
  const double s = len_sq > 0.0 ? std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

inline double cube_sdf(const Vec3& p, double half) {
  const Vec3 d = p.cwiseAbs() - Vec3::Constant(half);
  const double outside = d.cwiseMax(0.0).norm();
  const double inside = std::min(d.maxCoeff(), 0.0);
  return outside + inside;
}

// Central differences of a scalar function of a vector.
inline VecX numeric_gradient(const std::function<double(const VecX&)>& f, const VecX& x, double h = 1e-5) {
  VecX g(x.size());
  VecX xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = xp[i];
    xp[i] = keep + h;
    const double fp = f(xp);
    xp[i] = keep - h;
    const double fm = f(xp);
    xp[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// max |a - b| / max(1, |b|_inf): relative error with an absolute floor for tiny gradients.
inline double relative_error(const VecX& analytic, const VecX& numeric) {
  const double scale = std::max(1e-6, numeric.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline geometry::TriangleMesh random_triangle_soup(int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  geometry::TriangleMesh mesh;
  for (int t = 0; t < count; ++t) {
    const Vec3 c(u(rng), u(rng), u(rng));
    for (int k = 0; k < 3; ++k) mesh.vertices.push_back(c + 0.2 * Vec3(u(rng), u(rng), u(rng)));
    mesh.triangles.push_back({3 * t, 3 * t + 1, 3 * t + 2});
  }
  return mesh;
}

// Watertight blob: icosphere with radially perturbed vertices (star-shaped, so still closed and simple).
inline geometry::TriangleMesh random_watertight(std::mt19937_64& rng, int subdivisions = 3) {
  auto mesh = geometry::make_icosphere(Vec3::Zero(), 1.0, subdivisions);
  std::uniform_real_distribution<double> u(0.7, 1.2);
  std::uniform_real_distribution<double> c(-0.3, 0.3);
  const Vec3 center(c(rng), c(rng), c(rng));
  for (auto& v : mesh.vertices) v = center + u(rng) * v;
  return mesh;
}

} // namespace mdkit::testing
