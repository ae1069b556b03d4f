#pragma once

#include <Eigen/Dense>

namespace hkframe {

/// Lawson-Hanson active-set solver for min |Ax - b|_2 subject to x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0, double tol = 0.0);

}  // namespace hkframe
