#pragma once

#include "mdkit/types.hpp"

namespace mdkit::body {

using Rot6 = Eigen::Matrix<double, 6, 1>;

// Gram-Schmidt on the two embedded columns; throws DegenerateRotation6D when
// they are (numerically) parallel or zero.
Mat3 rot6d_to_matrix(const Rot6& r);

// First two columns of R. Throws NotARotation unless R is orthonormal with
// det +1 to 1e-9.
Rot6 matrix_to_rot6d(const Mat3& R);

// Vector-Jacobian product of rot6d_to_matrix: given dL/dR returns dL/dr.
Rot6 rot6d_to_matrix_vjp(const Rot6& r, const Mat3& grad_R);

Mat3 axis_angle(const Vec3& axis, double angle);

} // namespace mdkit::body
