#pragma once

#include <Eigen/Dense>

namespace logitunc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A set of points, one observation per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorRef = Eigen::Ref<const Vector>;

}  // namespace logitunc
