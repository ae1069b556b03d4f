#include "hkframe/spectral.hpp"

#include "hkframe/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hkframe {

SpectralOperator eigendecompose(const MetricMeasureSpace& space, const Eigen::MatrixXd& L, const std::string& source) {
  const Eigen::Index n = static_cast<Eigen::Index>(space.size());
  if (L.rows() != n || L.cols() != n)
    throw Error(ErrorKind::IndexMismatch, "operator is " + std::to_string(L.rows()) + "x" + std::to_string(L.cols()) +
                                              " but the space has " + std::to_string(n) + " points");
  if (!L.allFinite()) throw Error(ErrorKind::MalformedInput, "operator has non-finite entries");

  const Eigen::VectorXd& mu = space.mu();
  Eigen::MatrixXd ML = mu.asDiagonal() * L;
  const double scale = std::max(1.0, ML.cwiseAbs().maxCoeff());
  const double asym = (ML - ML.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) {
    std::ostringstream os;
    os << "operator is not mu-self-adjoint, max |mu L - (mu L)^T| = " << asym;
    throw Error(ErrorKind::NotSelfAdjoint, os.str());
  }

  Eigen::VectorXd s = mu.cwiseSqrt();
  Eigen::VectorXd si = s.cwiseInverse();
  Eigen::MatrixXd A = s.asDiagonal() * L * si.asDiagonal();
  A = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NotSelfAdjoint, "eigensolver did not converge");

  SpectralOperator op;
  op.eigenvalues = es.eigenvalues();
  op.lambda_max = n > 0 ? std::max(0.0, op.eigenvalues(n - 1)) : 0.0;
  if (n > 0) {
    const double lo = op.eigenvalues(0);
    if (lo < -1e-8 * op.lambda_max - 1e-14) {
      std::ostringstream os;
      os << "smallest eigenvalue " << lo << " is below -1e-8 * lambda_max";
      throw Error(ErrorKind::NegativeSpectrum, os.str());
    }
  }
  op.eigenvalues = op.eigenvalues.cwiseMax(0.0);
  op.eigenvectors = si.asDiagonal() * es.eigenvectors();
  op.mu = mu;
  op.source = source;
  return op;
}

KernelMatrix apply_spectral_values(const SpectralOperator& op, const Eigen::VectorXd& values) {
  const Eigen::MatrixXd& U = op.eigenvectors;
  Eigen::MatrixXd W = U * values.asDiagonal();
  return W * U.transpose();
}

KernelMatrix apply_profile(const SpectralOperator& op, const Profile& f) {
  Eigen::VectorXd v(op.size());
  for (Eigen::Index i = 0; i < op.size(); ++i) v(i) = f(std::sqrt(op.eigenvalues(i)));
  return apply_spectral_values(op, v);
}

KernelMatrix heat_kernel(const SpectralOperator& op, double t) {
  if (!(t > 0.0)) throw Error(ErrorKind::InvalidParams, "heat time must be positive");
  Eigen::VectorXd v = (-t * op.eigenvalues.array()).exp().matrix();
  return apply_spectral_values(op, v);
}

Eigen::VectorXd apply_kernel(const KernelMatrix& K, const Eigen::VectorXd& f, const Eigen::VectorXd& mu) {
  return K * f.cwiseProduct(mu);
}

Eigen::MatrixXd apply_kernel(const KernelMatrix& K, const Eigen::MatrixXd& F, const Eigen::VectorXd& mu) {
  return K * (mu.asDiagonal() * F);
}

KernelMatrix compose(const KernelMatrix& A, const KernelMatrix& B, const Eigen::VectorXd& mu) {
  return A * (mu.asDiagonal() * B);
}

namespace {

Eigen::VectorXd ball_measures(const MetricMeasureSpace& space, double r) {
  Eigen::VectorXd v(space.size());
  for (Index x = 0; x < space.size(); ++x) v(x) = ball_measure(space, x, r);
  return v;
}

}  // namespace

Eigen::MatrixXd decay_envelope(const MetricMeasureSpace& space, double delta, double sigma) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidParams, "envelope scale must be positive");
  const Index n = space.size();
  Eigen::VectorXd b = ball_measures(space, delta).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd D(n, n);
#pragma omp parallel for schedule(static)
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) D(x, y) = b(x) * b(y) * std::pow(1.0 + space.rho(x, y) / delta, -sigma);
  return D;
}

Eigen::MatrixXd subexp_envelope(const MetricMeasureSpace& space, double delta, double gamma, double beta) {
  if (!(delta > 0.0) || !(gamma > 0.0) || !(beta > 0.0 && beta < 1.0))
    throw Error(ErrorKind::InvalidParams, "need delta > 0, gamma > 0, beta in (0,1)");
  const Index n = space.size();
  Eigen::VectorXd b = ball_measures(space, delta).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd E(n, n);
#pragma omp parallel for schedule(static)
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y)
      E(x, y) = b(x) * b(y) * std::exp(-gamma * std::pow(space.rho(x, y) / delta, beta));
  return E;
}

namespace {

double max_ratio(const KernelMatrix& K, const Eigen::MatrixXd& env) {
  if (K.rows() != env.rows() || K.cols() != env.cols()) throw Error(ErrorKind::IndexMismatch, "kernel size mismatch");
  const Eigen::Index n = K.rows();
  Eigen::VectorXd row_max = Eigen::VectorXd::Zero(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index x = 0; x < n; ++x) {
    double m = 0.0;
    for (Eigen::Index y = 0; y < K.cols(); ++y) m = std::max(m, std::abs(K(x, y)) / env(x, y));
    row_max(x) = m;
  }
  return n > 0 ? row_max.maxCoeff() : 0.0;
}

}  // namespace

double decay_diagnostic(const KernelMatrix& K, const MetricMeasureSpace& space, double delta, double sigma) {
  return max_ratio(K, decay_envelope(space, delta, sigma));
}

double subexp_diagnostic(const KernelMatrix& K, const MetricMeasureSpace& space, double delta, double gamma,
                         double beta) {
  return max_ratio(K, subexp_envelope(space, delta, gamma, beta));
}

Eigen::MatrixXd adjacency_from_metric(const MetricMeasureSpace& space) {
  const Index n = space.size();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  const double tol = 1e-12 * std::max(1.0, space.diameter());
  for (Index x = 0; x < n; ++x) {
    for (Index y = x + 1; y < n; ++y) {
      const double dxy = space.rho(x, y);
      bool between = false;
      for (Index z = 0; z < n && !between; ++z) {
        if (z == x || z == y) continue;
        between = space.rho(x, z) + space.rho(z, y) <= dxy + tol;
      }
      if (!between) W(x, y) = W(y, x) = 1.0 / dxy;
    }
  }
  return W;
}

Eigen::MatrixXd unnormalized_laplacian(const Eigen::MatrixXd& W, const Eigen::VectorXd& mu) {
  Eigen::MatrixXd L = -W;
  L.diagonal() = W.rowwise().sum();
  return mu.cwiseInverse().asDiagonal() * L;
}

Eigen::MatrixXd random_walk_laplacian(const Eigen::MatrixXd& W) {
  if (W.rows() == 1) return Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd deg = W.rowwise().sum();
  if (deg.size() > 0 && !(deg.minCoeff() > 0.0))
    throw Error(ErrorKind::MalformedInput, "random-walk Laplacian needs every vertex to have an edge");
  Eigen::MatrixXd L = -(deg.cwiseInverse().asDiagonal() * W);
  L.diagonal().array() += 1.0;
  return L;
}

Eigen::MatrixXd make_laplacian(const std::string& kind, const Eigen::MatrixXd& W, const Eigen::VectorXd& mu) {
  if (kind == "unnormalized") return unnormalized_laplacian(W, mu);
  if (kind == "random_walk_symmetrized") return random_walk_laplacian(W);
  throw Error(ErrorKind::InvalidParams, "unknown laplacian '" + kind + "'");
}

}  // namespace hkframe
