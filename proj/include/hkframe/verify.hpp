#pragma once

#include "hkframe/calibration.hpp"
#include "hkframe/cubes.hpp"
#include "hkframe/frame.hpp"
#include "hkframe/norms.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hkframe {

struct BatteryFunction {
  std::string name;
  Eigen::VectorXd values;
};

struct FunctionBattery {
  std::vector<BatteryFunction> functions;
  std::uint64_t seed = 0;
  int size = 0;
};

/// Deterministic test functions: one eigenvector per nonzero band, eigenvectors
/// at fixed fractions of the spectrum, two point indicators, heat-smoothed
/// noise and random band-limited combinations. Every member has unit L^2(mu) norm.
FunctionBattery make_battery(const SpectralOperator& op, const BumpPair& bumps, std::uint64_t seed = 0, int size = 20);

struct EquivalenceReport {
  std::string claim;
  std::string norm_a;
  std::string norm_b;
  std::vector<std::string> names;
  std::vector<double> ratios;  // norm_a / norm_b per function
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread = 0.0;         // max / min
  std::optional<double> spread_refined;  // same claim on the 2N geometry, when run
  nlohmann::json parameters = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();

  void finish();  // fills min/max/spread from ratios
};

nlohmann::json to_json(const EquivalenceReport& r);

/// Artifacts a claim may need; missing ones raise PrerequisiteMissing.
struct VerifyContext {
  const MetricMeasureSpace* space = nullptr;
  const CubeSystem* cubes = nullptr;
  const LPCalibration* calib = nullptr;
  const SubcubeGrid* grid = nullptr;
  const SynthesisFrame* frame = nullptr;
  FunctionBattery battery;
  double d = 1.0;
};

struct ClaimConfig {
  double s = 0.5;
  double tau = 0.0;
  double p = 2.0;
  double q = 2.0;
  Family family = Family::B;
  Variant variant = Variant::Plain;
  std::optional<double> a;  // Peetre exponent; default threshold + 1
  std::optional<int> m;     // heat exponent; default ceil(s/beta0) + 1
  int points_per_octave = 8;
  double glue_exponent = 0.875;  // second bump pair for bump_independence
};

const std::vector<std::string>& claim_ids();

/// Computes both norms on the battery. Throws HypothesisViolated when the
/// claim's hypotheses fail for the given configuration.
EquivalenceReport run_equivalence(const std::string& claim, const VerifyContext& ctx, const ClaimConfig& config);

/// Smallest C with [P_l]*_{nu + d/r, gamma} f <= C sum_{j>=l} delta^{(j-l)nu} M_r(|B(., delta^j)|^gamma |M_j f|)
/// at every point and level; 0 for f = 0.
double peetre_domination_check(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                               double d, double r, double nu, double gamma = 0.0);

/// max_{x,y} sum_i |Q_i| E(x, xi_i) E(xi_i, y) / E(x, y) with E the
/// sub-exponential envelope at scale delta^j.
double composition_constant(const MetricMeasureSpace& space, const SubcubeGrid& grid, int j, double delta,
                            double gamma, double beta);

/// Relative L^2(mu) reconstruction error of synthesis(analysis(f)).
double reconstruction_error(const Eigen::VectorXd& f, const LPCalibration& calib, const SubcubeGrid& grid,
                            const SynthesisFrame& frame);

}  // namespace hkframe
