#pragma once

#include "hkframe/spectral.hpp"

#include <json.hpp>

#include <vector>

namespace hkframe {

/// Smooth nonincreasing cutoff: 1 on [0, r1], 0 on [r2, inf), exp(-1/x) glue
/// in between.
struct Cutoff {
  double r1 = 1.0;
  double r2 = 2.0;

  double operator()(double x) const;
};

enum class BumpKind {
  Difference,      // phi = eta(l) - eta(l/a)
  RootDifference,  // phi = sqrt(eta(l) - eta(l/a)); squares sum to 1
};

/// Littlewood-Paley bump pair. With a = delta^{beta0/2}:
/// phi0 = eta, phi(l) = eta(l) - eta(l/a), level j profile phi(a^j l).
/// Supports: phi0 in [0, r2], phi in [a, r2] with r2 <= 1/a.
struct BumpPair {
  double delta = 0.5;
  double beta0 = 2.0;
  double a = 0.5;
  Cutoff eta;
  BumpKind kind = BumpKind::Difference;
  double lower_bound = 0.0;  // min of |phi0| / |phi| on the certified regions

  double phi0(double l) const;
  double phi(double l) const;
  double level(int j, double l) const;  // phi0 for j = 0, phi(a^j l) otherwise
  nlohmann::json tag() const;
};

/// `glue_exponent` sets eta's outer edge r2 = a^{-glue_exponent}; it must lie
/// in (3/4, 1] for the support and lower-bound regions to hold.
BumpPair make_bump_pair(double delta, double beta0, double glue_exponent = 1.0,
                        BumpKind kind = BumpKind::Difference);

/// phi0 / S and phi / S~ where S is the sum of squares of all level profiles.
struct DualPair {
  BumpPair bumps;

  double square_sum(double l) const;            // phi0^2 + sum_{j>=1} phi_j^2
  double periodic_square_sum(double l) const;   // sum over all integer dilations of phi^2
  double dual0(double l) const;
  double dual(double l) const;
  double level(int j, double l) const;
};

/// Throws DegenerateLowerBound if the square sum drops below 1e-8 on a dense grid.
DualPair make_dual_pair(const BumpPair& bumps);

struct LPCalibration {
  SpectralOperator op;
  BumpPair bumps;
  DualPair duals;
  int J_max = 0;
  std::vector<KernelMatrix> level_ops;  // M_j, j = 0..J_max
  std::vector<KernelMatrix> dual_ops;   // dual M_j
  Eigen::VectorXd spectral_grid;        // sqrt of the eigenvalues

  double delta() const { return bumps.delta; }
  double beta0() const { return bumps.beta0; }
  /// M_j, or the zero kernel for j outside [0, J_max].
  KernelMatrix level(int j) const;
};

/// Smallest j >= 0 with a^j sqrt(lambda_max) < a.
int lp_level_count(double lambda_max, double a);

LPCalibration build_calibration(const SpectralOperator& op, const BumpPair& bumps);

struct CrfReport {
  double operator_norm = 0.0;     // power-iteration estimate of |sum dual M_j M_j - Id|
  double battery_residual = 0.0;  // max relative residual over random vectors
  double spectral_residual = 0.0; // max_i |sum_j dual_j phi_j (sqrt lambda_i) - 1|
  int levels_used = 0;
};

/// `levels` < 0 means all levels 0..J_max; otherwise levels 0..levels-1.
CrfReport verify_crf(const LPCalibration& calib, int levels = -1, int power_steps = 50, int battery = 20,
                     std::uint64_t seed = 0);

/// Entry (j,k) = max |(M_j dual M_k)(x,y)| / [delta^{|k-j|(m beta0 - d)} D_{delta^{min(j,k)},sigma}(x,y)].
Eigen::MatrixXd almost_orthogonality_report(const LPCalibration& calib, const MetricMeasureSpace& space, int m,
                                            double sigma, double d);

/// Operator norm in L^2(mu) of the operator whose action on vectors is `A`
/// (so a kernel K acts as K diag(mu)), by power iteration on A* A.
double operator_norm_mu(const Eigen::MatrixXd& A, const Eigen::VectorXd& mu, int steps = 50,
                        std::uint64_t seed = 0);

}  // namespace hkframe
