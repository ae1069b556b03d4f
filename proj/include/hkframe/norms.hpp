#pragma once

#include "hkframe/calibration.hpp"
#include "hkframe/cubes.hpp"
#include "hkframe/kernels.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hkframe {

enum class Family { B, F };
enum class Variant { Plain, Tilde };
enum class KRange { Full, NonnegativeOnly };

struct SpaceParams {
  double s = 0.0;
  double tau = 0.0;
  double p = 2.0;
  double q = 2.0;
  Family family = Family::B;
  Variant variant = Variant::Plain;
  KRange k_range = KRange::Full;
  std::optional<double> d;  // homogeneous dimension; measured from the space when empty

  /// Throws InvalidParams (F needs p < inf, tau >= 0, p, q > 0).
  void validate() const;
};

Family parse_family(const std::string& s);
Variant parse_variant(const std::string& s);
std::string to_string(Family f);
std::string to_string(Variant v);

struct NormBreakdown {
  double value = 0.0;
  int k = 0;              // level of the cube attaining the supremum
  Index alpha = 0;        // its id at cubes.level(k)
  double cube_measure = 0.0;
  double p = 2.0, q = 2.0, tau = 0.0;
  Family family = Family::B;
  std::vector<int> columns;              // level (or time-node) indices entering at k
  std::vector<double> column_weights;
  std::vector<double> per_level_terms;   // L^p(Q) norm of each column
  std::vector<Index> members;
  std::vector<double> point_measures;
  std::vector<double> per_point_terms;   // inner l^q value at each member
  bool below_threshold = false;          // Peetre exponent at or under peetre_threshold

  /// Recomputes the supremum from the stored terms.
  double recompute() const;
};

nlohmann::json to_json(const NormBreakdown& b);

/// d = log2 of the measured doubling constant.
double homogeneous_dimension(const MetricMeasureSpace& space);

/// Outer cube levels: [min(k_min, 0), k_max] or [0, k_max].
std::vector<int> outer_levels(const CubeSystem& cubes, KRange range);

/// Mixed norm of level functions: column j of `levels` is g_j, j = 0..J.
/// Family B gives l^q(L^p_tau), F gives L^p_tau(l^q).
NormBreakdown lp_tau_seq_norm(const Eigen::MatrixXd& levels, const MetricMeasureSpace& space, const CubeSystem& cubes,
                              const SpaceParams& params);

/// Weighted level functions delta^{-js} M_j f (plain) or |B(x,delta^j)|^{-s/d} M_j f (tilde).
Eigen::MatrixXd weighted_levels(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                                const SpaceParams& params);

NormBreakdown besov_type_norm(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                              const CubeSystem& cubes, const SpaceParams& params);
NormBreakdown triebel_type_norm(const Eigen::VectorXd& f, const LPCalibration& calib,
                                const MetricMeasureSpace& space, const CubeSystem& cubes, const SpaceParams& params);
/// Dispatches on params.family.
NormBreakdown function_norm(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                            const CubeSystem& cubes, const SpaceParams& params);

/// max_y |B(y, delta^l)|^gamma |M_l f(y)| / (1 + delta^{-l} rho(x,y))^a.
Eigen::VectorXd peetre_maximal(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                               int level, double a, double gamma);

/// Lower bound on the Peetre exponent: d(tau + 1/p) for B, d(tau + 1/min(p,q)) for F.
double peetre_threshold(const SpaceParams& params, double d);

NormBreakdown peetre_norm(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                          const CubeSystem& cubes, const SpaceParams& params, double a);

/// Heat profile levels h_0 = exp(-l^2), h_j(l) = (a^j l)^{2m} exp(-(a^j l)^2).
double heat_level_profile(int j, double l, double a, int m);

/// Throws InvalidM if m <= s/beta0.
NormBreakdown heat_norm_discrete(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                                 const CubeSystem& cubes, const SpaceParams& params, int m);

struct ContinuousHeatNorm {
  double value = 0.0;         // boundary + integral
  double boundary = 0.0;      // sup over k <= 0 cubes of the e^{-L} f term
  double integral = 0.0;      // supremum of the time-integrated part
  int nodes = 0;
  double t_min = 0.0;
  NormBreakdown breakdown;
};

/// Trapezoid rule in log t on t = 2^{-i/points_per_octave}, plus the nodes
/// delta^k, down to where the integrand is below 1e-10 of its scale.
ContinuousHeatNorm heat_norm_continuous(const Eigen::VectorXd& f, const LPCalibration& calib,
                                        const MetricMeasureSpace& space, const CubeSystem& cubes,
                                        const SpaceParams& params, int m, int points_per_octave = 8);

/// F^s_{inf,q} := F^{s,1/q}_{q,q}; q = inf gives B^{s,0}_{inf,inf}.
NormBreakdown endpoint_finfty_norm(const Eigen::VectorXd& f, const LPCalibration& calib,
                                   const MetricMeasureSpace& space, const CubeSystem& cubes, double s, double q,
                                   Variant variant = Variant::Plain, std::optional<double> d = {});

/// (M(|g|^r))^{1/r} over closed balls centred anywhere.
Eigen::VectorXd hl_maximal(const Eigen::VectorXd& g, const MetricMeasureSpace& space, double r = 1.0);

/// 2^{max(1/min(p,q,1) - 1, 0) + 1}.
double quasi_triangle_constant(double p, double q);

/// Ball measures |B(x, r)| for every x.
Eigen::VectorXd ball_measures(const MetricMeasureSpace& space, double r);

}  // namespace hkframe
