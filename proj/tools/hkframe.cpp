#include "hkframe/generate.hpp"
#include "hkframe/io.hpp"
#include "hkframe/pipeline.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>

using namespace hkframe;
namespace fs = std::filesystem;

namespace {

void emit(const nlohmann::json& j, const std::string& out) {
  if (out.empty()) std::cout << dump_json(j);
  else write_file(out, dump_json(j));
}

double parse_exponent(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidParams, "cannot parse exponent '" + s + "'");
  }
}

Eigen::VectorXd read_function(const std::string& path, const MetricMeasureSpace& space) {
  const nlohmann::json doc = read_json(path);
  Eigen::VectorXd f(space.size());
  if (doc.is_array() || (doc.is_object() && doc.contains("values") && doc["values"].is_array())) {
    const auto& arr = doc.is_array() ? doc : doc["values"];
    if (arr.size() != space.size())
      throw Error(ErrorKind::IndexMismatch, "function has " + std::to_string(arr.size()) + " values for " +
                                                std::to_string(space.size()) + " points");
    for (std::size_t i = 0; i < arr.size(); ++i) f(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  } else if (doc.is_object()) {
    f.setZero();
    for (const auto& [id, v] : doc.items()) f(static_cast<Eigen::Index>(space.index_of(id))) = v.get<double>();
  } else {
    throw Error(ErrorKind::MalformedInput, "function file must be an array or an object");
  }
  return f;
}

struct CubesDoc {
  CubeSystem cubes;
  SubcubeGrid grid;
};

CubesDoc read_cubes(const std::string& path, const MetricMeasureSpace& space) {
  const nlohmann::json doc = read_json(path);
  if (!doc.contains("cubes") || !doc.contains("grid"))
    throw Error(ErrorKind::MalformedInput, "'" + path + "' needs 'cubes' and 'grid'");
  return {cubes_from_json(doc.at("cubes"), space), grid_from_json(doc.at("grid"))};
}

LPCalibration read_calib(const std::string& path) {
  return calibration_from_artifact(decode_binary(read_file(path), kCalibMagic, path));
}

Eigen::MatrixXd operator_of(const SpaceFile& sf, const std::string& laplacian) {
  if (sf.op) return *sf.op;
  return make_laplacian(laplacian, adjacency_from_metric(sf.space), sf.space.mu());
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("HKFRAME_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) omp_set_num_threads(n);
  }

  CLI::App app{"Spectral Littlewood-Paley frames and function-space norms on finite metric measure spaces"};
  app.require_subcommand(1);

  // space
  auto* space_cmd = app.add_subcommand("space", "Validate and describe a space file");
  space_cmd->require_subcommand(1);
  std::string space_path, out_path;
  bool normalize = false;
  auto* sv = space_cmd->add_subcommand("validate", "Check the metric and measure axioms");
  sv->add_option("file", space_path)->required();
  auto* sr = space_cmd->add_subcommand("report", "Measured doubling, reverse doubling and non-collapsing constants");
  sr->add_option("file", space_path)->required();
  sr->add_option("--out", out_path);
  sr->add_flag("--normalize", normalize, "scale distances so the smallest is 1");

  // cubes
  auto* cubes_cmd = app.add_subcommand("cubes", "Dyadic cubes and subcube grids");
  cubes_cmd->require_subcommand(1);
  double delta = 0.5, eps0 = 0.1;
  std::uint64_t seed = 0;
  int j0 = 1;
  std::string rule = "center", cubes_path;
  auto* cb = cubes_cmd->add_subcommand("build", "Build cubes and the subcube grid");
  cb->add_option("space", space_path)->required();
  cb->add_option("--delta", delta);
  cb->add_option("--seed", seed);
  cb->add_option("--j0", j0);
  cb->add_option("--eps0", eps0);
  cb->add_option("--rule", rule);
  cb->add_option("--out", out_path);
  auto* cv = cubes_cmd->add_subcommand("verify", "Check the cube axioms");
  cv->add_option("cubes", cubes_path)->required();
  cv->add_option("--space", space_path, "space the cubes were built on")->required();
  cv->add_option("--out", out_path);
  auto* cg = cubes_cmd->add_subcommand("grid", "Rebuild the subcube grid of a cubes file");
  cg->add_option("cubes", cubes_path)->required();
  cg->add_option("--space", space_path, "space the cubes were built on")->required();
  cg->add_option("--j0", j0);
  cg->add_option("--eps0", eps0);
  cg->add_option("--rule", rule);
  cg->add_option("--seed", seed);
  cg->add_option("--out", out_path);

  // calib
  auto* calib_cmd = app.add_subcommand("calib", "Littlewood-Paley calibration");
  calib_cmd->require_subcommand(1);
  double beta0 = 2.0, glue = 1.0;
  std::string laplacian = "unnormalized", report_path;
  auto* clb = calib_cmd->add_subcommand("build", "Eigendecompose the operator and build the band kernels");
  clb->add_option("space", space_path)->required();
  clb->add_option("cubes", cubes_path, "cubes file; its delta is used and must match --delta");
  auto* delta_opt = clb->add_option("--delta", delta);
  clb->add_option("--beta0", beta0);
  clb->add_option("--glue", glue, "outer edge exponent of the cutoff, in (3/4, 1]");
  clb->add_option("--laplacian", laplacian, "used when the space file has no operator");
  clb->add_option("--out", out_path)->required();
  clb->add_option("--report", report_path, "write the reproducing-formula residuals here");

  // frame
  auto* frame_cmd = app.add_subcommand("frame", "Discrete synthesis frame");
  frame_cmd->require_subcommand(1);
  std::string calib_path, frame_path;
  double tol = 1e-12;
  auto* fb = frame_cmd->add_subcommand("build", "Build the synthesis atoms");
  fb->add_option("calib", calib_path)->required();
  fb->add_option("cubes", cubes_path, "cubes file holding the subcube grid")->required();
  fb->add_option("--tol", tol);
  fb->add_option("--out", out_path)->required();
  auto* fr = frame_cmd->add_subcommand("roundtrip", "Reconstruction error on the function battery");
  fr->add_option("calib", calib_path)->required();
  fr->add_option("frame", frame_path)->required();
  std::string f_path;
  fr->add_option("--f", f_path, "reconstruct this function instead of the battery");
  int battery_size = 20;
  fr->add_option("--battery", battery_size);
  fr->add_option("--seed", seed);
  fr->add_option("--out", out_path);

  // norm
  auto* norm_cmd = app.add_subcommand("norm", "Besov-type or Triebel-Lizorkin-type norm of a function");
  std::string family = "B", variant = "plain", p_str = "2", q_str = "2";
  double s = 0.0, tau = 0.0;
  bool explain = false;
  norm_cmd->add_option("space", space_path)->required();
  norm_cmd->add_option("cubes", cubes_path)->required();
  norm_cmd->add_option("calib", calib_path)->required();
  norm_cmd->add_option("--out", out_path, "write the breakdown JSON here");
  norm_cmd->add_option("--f", f_path, "JSON array, {\"values\": [...]} or {id: value}")->required();
  norm_cmd->add_option("--s", s);
  norm_cmd->add_option("--tau", tau);
  norm_cmd->add_option("--p", p_str);
  norm_cmd->add_option("--q", q_str);
  norm_cmd->add_option("--family", family);
  norm_cmd->add_option("--variant", variant);
  norm_cmd->add_flag("--explain", explain, "print the breakdown JSON instead of the value");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Equivalence reports on a workspace");
  std::string claim, workspace;
  verify_cmd->add_option("claim", claim, "claim id or 'all'")->required();
  verify_cmd->add_option("workspace", workspace)->required();
  verify_cmd->add_option("--out", out_path)->required();

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Write a generated graph as a space file");
  std::string kind;
  gen_cmd->add_option("kind", kind, "cycle(n) torus(n,m) path(n) binary_tree(depth) gasket(level) random_geometric(n,r,seed)")
      ->required();
  gen_cmd->add_option("--laplacian", laplacian, "unnormalized or random_walk_symmetrized");
  gen_cmd->add_option("--out", out_path);

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "space -> cubes -> calib -> frame -> verify in a workspace");
  std::string config_path;
  bool force = false;
  pipe_cmd->add_option("space", space_path)->required();
  pipe_cmd->add_option("workspace", workspace)->required();
  pipe_cmd->add_option("--config", config_path);
  pipe_cmd->add_flag("--force", force, "recompute every stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*space_cmd) {
      SpaceFile sf = read_space_file(space_path);
      if (*sv) {
        std::cout << "valid: " << sf.space.size() << " points, total measure " << sf.space.total_measure()
                  << ", diameter " << sf.space.diameter() << "\n";
      } else {
        const MetricMeasureSpace sp = normalize ? sf.space.normalized() : sf.space;
        emit(to_json(geometry_report(sp)), out_path);
      }
    } else if (*cubes_cmd) {
      const SpaceFile sf = read_space_file(space_path);
      if (*cb) {
        const CubeSystem cubes = build_cubes(sf.space, delta, seed);
        const SubcubeGrid grid = subcube_grid(cubes, j0, eps0, parse_sample_rule(rule), seed);
        emit({{"cubes", to_json(cubes)}, {"grid", to_json(grid)}, {"axioms", to_json(verify_cube_axioms(cubes, sf.space))}},
             out_path);
      } else if (*cv) {
        const CubesDoc cd = read_cubes(cubes_path, sf.space);
        const CubeAxiomReport rep = verify_cube_axioms(cd.cubes, sf.space);
        emit(to_json(rep), out_path);
        if (!rep.all_pass()) return 2;
      } else {
        const CubesDoc cd = read_cubes(cubes_path, sf.space);
        emit(to_json(subcube_grid(cd.cubes, j0, eps0, parse_sample_rule(rule), seed)), out_path);
      }
    } else if (*calib_cmd) {
      const SpaceFile sf = read_space_file(space_path);
      if (!cubes_path.empty()) {
        const double cd = read_json(cubes_path).at("cubes").at("delta").get<double>();
        if (*delta_opt && cd != delta) throw Error(ErrorKind::InvalidDelta, "--delta differs from the cubes file");
        delta = cd;
      }
      const SpectralOperator op = eigendecompose(sf.space, operator_of(sf, laplacian),
                                                 sf.laplacian.empty() ? laplacian : sf.laplacian);
      const LPCalibration calib = build_calibration(op, make_bump_pair(delta, beta0, glue));
      write_file(out_path, encode_binary(calibration_to_artifact(calib), kCalibMagic));
      if (!report_path.empty()) {
        const CrfReport r = verify_crf(calib);
        emit({{"operator_norm", r.operator_norm},
              {"battery_residual", r.battery_residual},
              {"spectral_residual", r.spectral_residual},
              {"levels_used", r.levels_used},
              {"J_max", calib.J_max},
              {"bumps", calib.bumps.tag()}},
             report_path);
      }
    } else if (*frame_cmd) {
      const LPCalibration calib = read_calib(calib_path);
      if (*fb) {
        const nlohmann::json doc = read_json(cubes_path);
        if (!doc.contains("grid")) throw Error(ErrorKind::MalformedInput, "'" + cubes_path + "' has no grid");
        const SubcubeGrid grid = grid_from_json(doc.at("grid"));
        const SynthesisFrame frame = build_synthesis_frame(calib, grid, tol);
        write_file(out_path, encode_binary(frame_to_artifact(frame, grid), kFrameMagic));
      } else {
        const BinaryArtifact art = decode_binary(read_file(frame_path), kFrameMagic, frame_path);
        const SynthesisFrame frame = frame_from_artifact(art);
        const SubcubeGrid grid = frame_grid_from_artifact(art);
        FunctionBattery bat;
        if (f_path.empty()) {
          bat = make_battery(calib.op, calib.bumps, seed, battery_size);
        } else {
          const nlohmann::json doc = read_json(f_path);
          const auto& arr = doc.is_array() ? doc : doc.at("values");
          Eigen::VectorXd f(calib.op.size());
          if (arr.size() != static_cast<std::size_t>(f.size()))
            throw Error(ErrorKind::IndexMismatch, "function length does not match the calibration");
          for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = arr[static_cast<std::size_t>(i)].get<double>();
          bat.functions.push_back({f_path, f});
        }
        nlohmann::json per = nlohmann::json::array();
        double worst = 0.0;
        for (const auto& f : bat.functions) {
          const double e = reconstruction_error(f.values, calib, grid, frame);
          worst = std::max(worst, e);
          per.push_back({{"function", f.name}, {"relative_error", e}});
        }
        emit({{"max_relative_error", worst}, {"eps0", frame.eps0}, {"total_tail", frame.total_tail()},
              {"functions", per}},
             out_path);
      }
    } else if (*norm_cmd) {
      const SpaceFile sf = read_space_file(space_path);
      const CubesDoc cd = read_cubes(cubes_path, sf.space);
      const LPCalibration calib = read_calib(calib_path);
      SpaceParams P;
      P.s = s;
      P.tau = tau;
      P.p = parse_exponent(p_str);
      P.q = parse_exponent(q_str);
      P.family = parse_family(family);
      P.variant = parse_variant(variant);
      P.validate();
      const NormBreakdown b = function_norm(read_function(f_path, sf.space), calib, sf.space, cd.cubes, P);
      if (!out_path.empty()) write_file(out_path, dump_json(to_json(b)));
      if (explain) {
        std::cout << dump_json(to_json(b));
      } else {
        std::cout.precision(17);
        std::cout << b.value << "\n";
      }
    } else if (*verify_cmd) {
      const Workspace ws = load_workspace(workspace);
      std::vector<std::string> claims = claim == "all" ? claim_ids() : std::vector<std::string>{claim};
      if (claim != "all" && std::find(claim_ids().begin(), claim_ids().end(), claim) == claim_ids().end())
        throw Error(ErrorKind::InvalidParams, "unknown claim '" + claim + "'");
      const auto reports = verify_workspace(ws, out_path, claims);
      std::cout << read_file((fs::path(out_path) / "summary.csv").string());
      if (claim != "all" && reports.empty()) return 2;
    } else if (*gen_cmd) {
      GeneratorSpec spec = parse_generator(kind);
      spec.laplacian = laplacian;
      emit(generate(spec), out_path);
    } else if (*pipe_cmd) {
      PipelineConfig cfg;
      if (!config_path.empty()) cfg = parse_pipeline_config(read_json(config_path));
      const PipelineResult r = run_pipeline(space_path, workspace, cfg, force);
      for (const auto& st : r.executed) std::cout << "ran    " << st << "\n";
      for (const auto& st : r.cached) std::cout << "cached " << st << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_numerical(e.kind()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
