#pragma once

#include <vector>

#include <Eigen/Dense>

namespace whipflow {

/// Ambient-space vector; d is 2 or 3, fixed per run.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

/// One d-vector per node (or per midpoint).
using VecField = std::vector<Vec>;
using ScalarField = std::vector<double>;

}  // namespace whipflow
