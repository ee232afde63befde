#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace byzfed {

/// A point in R^d: model parameter, local ERM, gradient or cluster center.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using PointSet = std::vector<Vector>;
using PointView = std::span<const Vector>;

}  // namespace byzfed
