#pragma once

#include "hkframe/calibration.hpp"
#include "hkframe/cubes.hpp"
#include "hkframe/norms.hpp"

#include <json.hpp>

#include <vector>

namespace hkframe {

/// Sampled band values a_{j,i} = (M_j f)(xi_i) for the subcubes of grid.level(j), j = 0..J_max.
struct FrameCoefficients {
  std::vector<std::vector<double>> values;    // [j][subcube]
  std::vector<std::vector<double>> measures;  // |Q| per subcube
  std::vector<std::vector<Index>> samples;    // xi per subcube

  int levels() const { return static_cast<int>(values.size()); }
};

FrameCoefficients analysis(const Eigen::VectorXd& f, const LPCalibration& calib, const SubcubeGrid& grid);

/// Cutoffs used by the construction (a = delta^{beta0/2}):
/// window: 1 on [a, 1/a], zero outside [a^2, a^-2]; window0: 1 on [0, 1/a], zero past a^-2;
/// sampler: 1 on [0, a^-3], zero past a^-4.
struct FrameProfiles {
  double a = 0.5;
  double window0(double l) const;
  double window(double l) const;
  double sampler(double l) const;
  double window_level(int j, double l) const;
  double sampler_level(int j, double l) const;
  nlohmann::json tag() const;
};

struct FrameLevel {
  int j = 0;
  Eigen::MatrixXd psi;           // psi(z, x): atom attached to point z evaluated at x
  std::vector<Index> samples;
  std::vector<double> measures;
  double residual_norm = 0.0;    // |R_j| in L^2(mu)
  int neumann_terms = 0;
  double tail_bound = 0.0;
};

struct SynthesisFrame {
  double eps0 = 0.1;
  double tol = 1e-12;
  FrameProfiles profiles;
  std::vector<FrameLevel> levels;  // j = 0..J_max
  std::vector<double> eps0_tried;
  std::vector<double> max_residual_tried;

  double total_tail() const;
  double max_residual() const;
};

/// Neumann terms K with r^{K+1}/(1-r) <= tol (0 when r = 0).
int neumann_terms_needed(double r, double tol);

/// Throws NeumannDivergence when no tried eps0 gives |R_j| < 1 at every level.
SynthesisFrame build_synthesis_frame(const LPCalibration& calib, const SubcubeGrid& grid, double tol = 1e-12);

/// sum_j sum_i |Q_i| a_{j,i} psi_j(xi_i, .)
Eigen::VectorXd synthesis(const FrameCoefficients& coeffs, const SynthesisFrame& frame);

/// b/f sequence norm: level functions sum_i w |a_{j,i}| chi_{Q_i} with
/// w = delta^{-js} (plain) or |Q_i|^{-s/d} (tilde), then the mixed norm of params.family.
NormBreakdown sequence_norm(const FrameCoefficients& coeffs, const SubcubeGrid& grid, const MetricMeasureSpace& space,
                            const CubeSystem& cubes, const SpaceParams& params);

/// Quartile-threshold functional: for each grid subcube Q at level k >= 0,
/// m_Q = inf{lambda > 0 : |{x in Q : G_Q(x) > lambda}| < |Q|/4} with
/// G_Q(x) = (sum_{j>=k} [w_j |a_j(x)|]^q)^{1/q}; returns x -> max over Q containing x.
Eigen::VectorXd stopping_functional(const FrameCoefficients& coeffs, const SubcubeGrid& grid,
                                    const MetricMeasureSpace& space, double s, double q,
                                    Variant variant = Variant::Tilde, double d = 1.0, double delta = 0.5);

/// Quartile threshold of values g with weights mu inside one set of total measure `total`.
double quartile_threshold(std::vector<std::pair<double, double>> values_and_mass, double total);

struct SamplingRatios {
  double low = 1.0;
  double high = 1.0;
  int functions = 0;
  int band_size = 0;
};

/// Ratio (sum_i |Q_i| |f(xi_i)|^p)^{1/p} / |f|_p over random combinations of
/// eigenvectors with sqrt(lambda_i) <= band. Throws LevelTooCoarse unless
/// j >= -(2/beta0) log_delta(band).
SamplingRatios mz_sampling_check(const SpectralOperator& op, const SubcubeGrid& grid, int j, double band, double p,
                                 double delta, double beta0, int functions = 20, std::uint64_t seed = 0);

struct CubatureResult {
  Eigen::VectorXd weights;
  std::vector<Index> samples;
  std::vector<double> measures;
  double residual = 0.0;
  double mass_error = 0.0;       // |sum eps |Q| - mu(M)|
  double in_range_fraction = 0.0;  // weights inside [2/3, 2]
  int moments = 0;
  std::string method;
};

/// Nonnegative weights integrating every eigenvector with sqrt(lambda) <= band
/// exactly. Throws InfeasibleMoments when the residual exceeds 1e-8.
CubatureResult cubature_weights(const SpectralOperator& op, const SubcubeGrid& grid, int j, double band, double delta,
                                double beta0);

/// Smallest integer j with j >= -(2/beta0) log_delta(band).
int min_sampling_level(double band, double delta, double beta0);

}  // namespace hkframe
