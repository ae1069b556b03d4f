#include "hkframe/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace hkframe {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::vector<bool>& passive) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < A.cols(); ++i)
    if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(A.cols());
  if (idx.empty()) return z;
  Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
  Eigen::VectorXd zp = Ap.completeOrthogonalDecomposition().solve(b);
  for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(static_cast<Eigen::Index>(c));
  return z;
}

}  // namespace

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter, double tol) {
  const Eigen::Index n = A.cols();
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 10);
  if (tol <= 0.0) tol = 10.0 * std::numeric_limits<double>::epsilon() * A.norm() * std::max<Eigen::Index>(A.rows(), n);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::VectorXd w = A.transpose() * (b - A * x);

  for (int outer = 0; outer < max_iter; ++outer) {
    Eigen::Index best = -1;
    double wmax = tol;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!passive[static_cast<std::size_t>(i)] && w(i) > wmax) {
        wmax = w(i);
        best = i;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner < max_iter; ++inner) {
      Eigen::VectorXd z = solve_passive(A, b, passive);
      bool feasible = true;
      for (Eigen::Index i = 0; i < n; ++i)
        if (passive[static_cast<std::size_t>(i)] && z(i) <= 0.0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (passive[static_cast<std::size_t>(i)] && z(i) <= 0.0) alpha = std::min(alpha, x(i) / (x(i) - z(i)));
      x += alpha * (z - x);
      for (Eigen::Index i = 0; i < n; ++i)
        if (passive[static_cast<std::size_t>(i)] && std::abs(x(i)) <= tol) {
          passive[static_cast<std::size_t>(i)] = false;
          x(i) = 0.0;
        }
    }
    w = A.transpose() * (b - A * x);
  }
  return x.cwiseMax(0.0);
}

}  // namespace hkframe
