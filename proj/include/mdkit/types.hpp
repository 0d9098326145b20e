#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace mdkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

// Row-per-point N×3 array.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

} // namespace mdkit
