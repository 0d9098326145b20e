#include "mdkit/body/rotation.hpp"

#include "mdkit/error.hpp"

#include <cmath>

namespace mdkit::body {

namespace {

constexpr double kDegenerate = 1e-12;

struct GramSchmidt {
  Vec3 a2;
  double n1, n2;
  Vec3 b1, b2, b3;
};

GramSchmidt orthonormalize(const Rot6& r) {
  GramSchmidt gs;
  const Vec3 a1 = r.head<3>();
  gs.a2 = r.tail<3>();
  gs.n1 = a1.norm();
  if (!(gs.n1 > kDegenerate)) fail(ErrorCode::DegenerateRotation6D, "first column is zero");
  gs.b1 = a1 / gs.n1;
  const Vec3 u = gs.a2 - gs.b1.dot(gs.a2) * gs.b1;
  gs.n2 = u.norm();
  if (!(gs.n2 > kDegenerate * std::max(1.0, gs.a2.norm()))) {
    fail(ErrorCode::DegenerateRotation6D, "columns are parallel");
  }
  gs.b2 = u / gs.n2;
  gs.b3 = gs.b1.cross(gs.b2);
  return gs;
}

} // namespace

Mat3 rot6d_to_matrix(const Rot6& r) {
  const auto gs = orthonormalize(r);
  Mat3 R;
  R.col(0) = gs.b1;
  R.col(1) = gs.b2;
  R.col(2) = gs.b3;
  return R;
}

Rot6 matrix_to_rot6d(const Mat3& R) {
  if (!R.allFinite() || (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(R.determinant() - 1.0) > 1e-9) {
    fail(ErrorCode::NotARotation, "matrix is not a proper rotation");
  }
  Rot6 r;
  r << R.col(0), R.col(1);
  return r;
}

Rot6 rot6d_to_matrix_vjp(const Rot6& r, const Mat3& grad_R) {
  const auto gs = orthonormalize(r);
  const Vec3 g1 = grad_R.col(0);
  const Vec3 g2 = grad_R.col(1);
  const Vec3 g3 = grad_R.col(2);

  // b3 = b1 x b2
  Vec3 gb1 = g1 + gs.b2.cross(g3);
  const Vec3 gb2 = g2 + g3.cross(gs.b1);
  // b2 = u / |u|
  const Vec3 gu = (gb2 - gs.b2 * gs.b2.dot(gb2)) / gs.n2;
  // u = a2 - (b1.a2) b1
  const Vec3 ga2 = gu - gs.b1 * gs.b1.dot(gu);
  gb1 -= gs.b1.dot(gs.a2) * gu + gs.a2 * gs.b1.dot(gu);
  // b1 = a1 / |a1|
  const Vec3 ga1 = (gb1 - gs.b1 * gs.b1.dot(gb1)) / gs.n1;

  Rot6 out;
  out << ga1, ga2;
  return out;
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

} // namespace mdkit::body
