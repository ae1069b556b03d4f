#pragma once

#include "hkframe/error.hpp"
#include "hkframe/verify.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hkframe {

struct PipelineConfig {
  double delta = 0.5;
  double beta0 = 2.0;
  int j0 = 1;
  double tol = 1e-12;
  std::uint64_t seed = 0;
  double eps0 = 0.1;
  SampleRule sample_rule = SampleRule::Center;
  std::string laplacian = "unnormalized";  // used when the space file carries no operator
  double glue_exponent = 1.0;
  std::optional<double> d;                 // default: measured homogeneous dimension
  bool verify = true;
  int battery_size = 20;
  std::vector<std::string> claims;         // empty: all claims
  double s = 0.5;
  double p = 2.0;
  double q = 2.0;
};

/// Unknown keys and wrong types throw MalformedInput.
PipelineConfig parse_pipeline_config(const nlohmann::json& doc);
nlohmann::json to_json(const PipelineConfig& c);

/// Per-claim defaults derived from the base parameters: tau = 2/p for the
/// collapse claim, tau = 1/p for the k >= 0 claim, m = 1 for the continuous heat claim.
ClaimConfig default_claim_config(const std::string& claim, const PipelineConfig& c);

/// Error raised by a pipeline stage; the message names the stage.
class StageError : public Error {
public:
  StageError(const std::string& stage, const Error& inner);
  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

struct PipelineResult {
  std::vector<std::string> executed;  // stages that ran
  std::vector<std::string> cached;    // stages satisfied from the manifest
  nlohmann::json manifest;
};

/// Runs space -> cubes -> calib -> frame -> verify inside `workspace`.
/// A stage is skipped when the manifest records identical inputs and its
/// outputs still hash to the recorded values; an output whose bytes no longer
/// match raises HashMismatch naming the file. `force` recomputes every stage.
PipelineResult run_pipeline(const std::string& space_file, const std::string& workspace, const PipelineConfig& config,
                            bool force = false);

/// Loaded workspace artifacts, hash-checked against the manifest.
struct Workspace {
  std::string dir;
  nlohmann::json manifest;
  SpaceFile space;
  CubeSystem cubes;
  SubcubeGrid grid;
  std::optional<LPCalibration> calib;
  std::optional<SynthesisFrame> frame;
  PipelineConfig config;
};

Workspace load_workspace(const std::string& dir);

/// Runs the claims on a loaded workspace and writes one JSON per claim plus
/// summary.csv into out_dir. Returns the reports (refused claims are listed
/// in the summary with their reason).
std::vector<EquivalenceReport> verify_workspace(const Workspace& ws, const std::string& out_dir,
                                                const std::vector<std::string>& claims);

}  // namespace hkframe
