#include "hkframe/calibration.hpp"

#include "hkframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hkframe {

double Cutoff::operator()(double x) const {
  if (x <= r1) return 1.0;
  if (x >= r2) return 0.0;
  const double t = (x - r1) / (r2 - r1);
  const double g1 = std::exp(-1.0 / (1.0 - t));
  const double g0 = std::exp(-1.0 / t);
  return g1 / (g1 + g0);
}

double BumpPair::phi0(double l) const {
  const double v = eta(l);
  return kind == BumpKind::RootDifference ? std::sqrt(v) : v;
}

double BumpPair::phi(double l) const {
  const double v = std::max(0.0, eta(l) - eta(l / a));
  return kind == BumpKind::RootDifference ? std::sqrt(v) : v;
}

double BumpPair::level(int j, double l) const {
  if (j < 0) return 0.0;
  if (j == 0) return phi0(l);
  return phi(std::pow(a, j) * l);
}

nlohmann::json BumpPair::tag() const {
  return {{"kind", kind == BumpKind::Difference ? "difference" : "root_difference"},
          {"delta", delta},
          {"beta0", beta0},
          {"a", a},
          {"r1", eta.r1},
          {"r2", eta.r2},
          {"glue", "exp(-1/x)"},
          {"lower_bound", lower_bound}};
}

BumpPair make_bump_pair(double delta, double beta0, double glue_exponent, BumpKind kind) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidDelta, "delta must lie in (0,1)");
  if (!(beta0 >= 2.0)) throw Error(ErrorKind::InvalidParams, "beta0 must be >= 2");
  if (!(glue_exponent > 0.75 && glue_exponent <= 1.0))
    throw Error(ErrorKind::InvalidParams, "glue exponent must lie in (3/4, 1]");
  BumpPair b;
  b.delta = delta;
  b.beta0 = beta0;
  b.a = std::pow(delta, beta0 / 2.0);
  b.eta = Cutoff{1.0, std::pow(b.a, -glue_exponent)};
  b.kind = kind;

  // Lower bounds on [0, a^{-3/4}] for phi0 and [a^{3/4}, a^{-3/4}] for phi.
  const int samples = 4096;
  double lb = b.phi0(std::pow(b.a, -0.75));
  const double lo = std::log(std::pow(b.a, 0.75));
  const double hi = std::log(std::pow(b.a, -0.75));
  for (int i = 0; i <= samples; ++i) lb = std::min(lb, b.phi(std::exp(lo + (hi - lo) * i / samples)));
  b.lower_bound = lb;
  return b;
}

double DualPair::periodic_square_sum(double l) const {
  if (!(l > 0.0)) return 0.0;
  const double a = bumps.a;
  const int n = static_cast<int>(std::floor(std::log(l) / std::log(1.0 / a)));
  double s = 0.0;
  for (int i = n - 2; i <= n + 2; ++i) {
    const double v = bumps.phi(std::pow(a, i) * l);
    s += v * v;
  }
  return s;
}

double DualPair::square_sum(double l) const {
  // Below 1 only phi0 is nonzero; from 1 on phi0 coincides with phi.
  if (l < 1.0) {
    const double v = bumps.phi0(l);
    return v * v;
  }
  return periodic_square_sum(l);
}

double DualPair::dual0(double l) const {
  const double v = bumps.phi0(l);
  return v == 0.0 ? 0.0 : v / square_sum(l);
}

double DualPair::dual(double l) const {
  const double v = bumps.phi(l);
  return v == 0.0 ? 0.0 : v / periodic_square_sum(l);
}

double DualPair::level(int j, double l) const {
  if (j < 0) return 0.0;
  if (j == 0) return dual0(l);
  return dual(std::pow(bumps.a, j) * l);
}

DualPair make_dual_pair(const BumpPair& bumps) {
  DualPair d{bumps};
  const int samples = 10000;
  const double top = bumps.eta.r2 / bumps.a * 1.01;
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) lo = std::min(lo, d.square_sum(top * i / samples));
  if (lo < 1e-8) throw Error(ErrorKind::DegenerateLowerBound, "square sum of the bump family drops below 1e-8");
  return d;
}

KernelMatrix LPCalibration::level(int j) const {
  if (j < 0 || j > J_max) return KernelMatrix::Zero(op.size(), op.size());
  return level_ops[static_cast<std::size_t>(j)];
}

int lp_level_count(double lambda_max, double a) {
  const double top = std::sqrt(std::max(0.0, lambda_max));
  int j = 0;
  while (!(std::pow(a, j) * top < a)) ++j;
  return j;
}

LPCalibration build_calibration(const SpectralOperator& op, const BumpPair& bumps) {
  LPCalibration c;
  c.op = op;
  c.bumps = bumps;
  c.duals = make_dual_pair(bumps);
  c.J_max = lp_level_count(op.lambda_max, bumps.a);
  c.spectral_grid = op.eigenvalues.cwiseSqrt();
  const int levels = c.J_max + 1;
  c.level_ops.resize(static_cast<std::size_t>(levels));
  c.dual_ops.resize(static_cast<std::size_t>(levels));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < levels; ++j) {
    Eigen::VectorXd v(op.size()), w(op.size());
    for (Eigen::Index i = 0; i < op.size(); ++i) {
      v(i) = bumps.level(j, c.spectral_grid(i));
      w(i) = c.duals.level(j, c.spectral_grid(i));
    }
    c.level_ops[static_cast<std::size_t>(j)] = apply_spectral_values(op, v);
    c.dual_ops[static_cast<std::size_t>(j)] = apply_spectral_values(op, w);
  }
  return c;
}

double operator_norm_mu(const Eigen::MatrixXd& A, const Eigen::VectorXd& mu, int steps, std::uint64_t seed) {
  const Eigen::Index n = A.rows();
  if (n == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  auto norm_mu = [&](const Eigen::VectorXd& x) { return std::sqrt(x.cwiseAbs2().dot(mu)); };
  Eigen::MatrixXd Aadj = mu.cwiseInverse().asDiagonal() * A.transpose() * mu.asDiagonal();
  v /= norm_mu(v);
  double est = 0.0;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd w = Aadj * (A * v);
    const double nw = norm_mu(w);
    est = std::sqrt(std::max(0.0, v.cwiseProduct(w).dot(mu)));
    if (nw == 0.0) return 0.0;
    v = w / nw;
  }
  return std::max(est, norm_mu(A * v));
}

CrfReport verify_crf(const LPCalibration& calib, int levels, int power_steps, int battery, std::uint64_t seed) {
  const Eigen::Index n = calib.op.size();
  const Eigen::VectorXd& mu = calib.op.mu;
  CrfReport rep;
  rep.levels_used = levels < 0 ? calib.J_max + 1 : std::min(levels, calib.J_max + 1);

  Eigen::MatrixXd R = -Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < rep.levels_used; ++j) {
    const auto& M = calib.level_ops[static_cast<std::size_t>(j)];
    const auto& D = calib.dual_ops[static_cast<std::size_t>(j)];
    R += D * mu.asDiagonal() * M * mu.asDiagonal();
  }
  rep.operator_norm = operator_norm_mu(R, mu, power_steps, seed);

  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> g;
  for (int b = 0; b < battery; ++b) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    const double nv = std::sqrt(v.cwiseAbs2().dot(mu));
    const double nr = std::sqrt((R * v).cwiseAbs2().dot(mu));
    rep.battery_residual = std::max(rep.battery_residual, nr / nv);
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < rep.levels_used; ++j)
      s += calib.duals.level(j, calib.spectral_grid(i)) * calib.bumps.level(j, calib.spectral_grid(i));
    rep.spectral_residual = std::max(rep.spectral_residual, std::abs(s - 1.0));
  }
  return rep;
}

Eigen::MatrixXd almost_orthogonality_report(const LPCalibration& calib, const MetricMeasureSpace& space, int m,
                                            double sigma, double d) {
  const int L = calib.J_max + 1;
  const double delta = calib.delta();
  std::vector<Eigen::MatrixXd> env(static_cast<std::size_t>(L));
  for (int j = 0; j < L; ++j) env[static_cast<std::size_t>(j)] = decay_envelope(space, std::pow(delta, j), sigma);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(L, L);
  const Eigen::VectorXd& mu = calib.op.mu;
  for (int j = 0; j < L; ++j) {
    for (int k = 0; k < L; ++k) {
      KernelMatrix P = compose(calib.level_ops[static_cast<std::size_t>(j)], calib.dual_ops[static_cast<std::size_t>(k)], mu);
      const double w = std::pow(delta, std::abs(k - j) * (m * calib.beta0() - d));
      const auto& E = env[static_cast<std::size_t>(std::min(j, k))];
      double best = 0.0;
      for (Eigen::Index x = 0; x < P.rows(); ++x)
        for (Eigen::Index y = 0; y < P.cols(); ++y) best = std::max(best, std::abs(P(x, y)) / (w * E(x, y)));
      out(j, k) = best;
    }
  }
  return out;
}

}  // namespace hkframe
