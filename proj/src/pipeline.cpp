#include "hkframe/pipeline.hpp"

#include "hkframe/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;

namespace hkframe {

namespace {

double number(const nlohmann::json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorKind::MalformedInput, "config key '" + key + "' must be a number");
}

nlohmann::json num_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

std::string message_of(const Error& e) {
  const std::string w = e.what();
  const auto pos = w.find(": ");
  return pos == std::string::npos ? w : w.substr(pos + 2);
}

std::string hash_json(const nlohmann::json& j) { return git_blob_hash(j.dump()); }

struct Stager {
  std::string dir;
  bool force;
  nlohmann::json manifest;
  PipelineResult* result;

  std::string path(const std::string& rel) const { return (fs::path(dir) / rel).string(); }

  // True when every recorded output of `stage` under `key` is present and intact.
  bool cached(const std::string& stage, const std::string& key) {
    if (force || !manifest["stages"].contains(stage)) return false;
    const auto& rec = manifest["stages"][stage];
    if (rec.value("key", std::string()) != key) return false;
    for (const auto& [rel, h] : rec.at("outputs").items()) {
      if (!fs::exists(path(rel))) return false;
      if (git_blob_hash(read_file(path(rel))) != h.get<std::string>())
        throw Error(ErrorKind::HashMismatch, "'" + rel + "' does not match the hash recorded in the manifest");
    }
    result->cached.push_back(stage);
    return true;
  }

  void record(const std::string& stage, const std::string& key, const std::vector<std::pair<std::string, std::string>>& files) {
    nlohmann::json outs = nlohmann::json::object();
    for (const auto& [rel, bytes] : files) {
      write_file(path(rel), bytes);
      outs[rel] = git_blob_hash(bytes);
    }
    manifest["stages"][stage] = {{"key", key}, {"outputs", outs}};
    write_file(path("manifest.json"), dump_json(manifest));
    result->executed.push_back(stage);
  }

  std::string output_hash(const std::string& stage, const std::string& rel) const {
    return manifest["stages"][stage]["outputs"][rel].get<std::string>();
  }
};

template <class F>
auto in_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

}  // namespace

StageError::StageError(const std::string& stage, const Error& inner)
    : Error(inner.kind(), "stage '" + stage + "': " + message_of(inner)), stage_(stage) {}

PipelineConfig parse_pipeline_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::MalformedInput, "pipeline config must be an object");
  PipelineConfig c;
  try {
    for (const auto& [k, v] : doc.items()) {
      if (k == "delta") c.delta = number(v, k);
      else if (k == "beta0") c.beta0 = number(v, k);
      else if (k == "j0") c.j0 = v.get<int>();
      else if (k == "tol") c.tol = number(v, k);
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "eps0") c.eps0 = number(v, k);
      else if (k == "sample_rule") c.sample_rule = parse_sample_rule(v.get<std::string>());
      else if (k == "laplacian") c.laplacian = v.get<std::string>();
      else if (k == "glue_exponent") c.glue_exponent = number(v, k);
      else if (k == "d") c.d = v.is_null() ? std::nullopt : std::optional<double>(number(v, k));
      else if (k == "verify") c.verify = v.get<bool>();
      else if (k == "battery_size") c.battery_size = v.get<int>();
      else if (k == "claims") c.claims = v.get<std::vector<std::string>>();
      else if (k == "s") c.s = number(v, k);
      else if (k == "p") c.p = number(v, k);
      else if (k == "q") c.q = number(v, k);
      else throw Error(ErrorKind::MalformedInput, "unknown config key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("pipeline config: ") + e.what());
  }
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw Error(ErrorKind::InvalidDelta, "delta must lie in (0,1)");
  if (!(c.beta0 >= 2.0)) throw Error(ErrorKind::InvalidParams, "beta0 must be >= 2");
  if (c.j0 < 0) throw Error(ErrorKind::InvalidParams, "j0 must be >= 0");
  if (!(c.tol > 0.0)) throw Error(ErrorKind::InvalidParams, "tol must be positive");
  for (const auto& cl : c.claims)
    if (std::find(claim_ids().begin(), claim_ids().end(), cl) == claim_ids().end())
      throw Error(ErrorKind::InvalidParams, "unknown claim '" + cl + "'");
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {{"delta", c.delta},
          {"beta0", c.beta0},
          {"j0", c.j0},
          {"tol", c.tol},
          {"seed", c.seed},
          {"eps0", c.eps0},
          {"sample_rule", to_string(c.sample_rule)},
          {"laplacian", c.laplacian},
          {"glue_exponent", c.glue_exponent},
          {"d", c.d ? nlohmann::json(*c.d) : nlohmann::json(nullptr)},
          {"verify", c.verify},
          {"battery_size", c.battery_size},
          {"claims", c.claims},
          {"s", c.s},
          {"p", num_json(c.p)},
          {"q", num_json(c.q)}};
}

ClaimConfig default_claim_config(const std::string& claim, const PipelineConfig& c) {
  ClaimConfig cc;
  cc.s = c.s;
  cc.p = c.p;
  cc.q = c.q;
  if (claim == "prop4.9") cc.tau = 2.0 / c.p;
  if (claim == "prop4.10") cc.tau = 1.0 / c.p;
  if (claim == "thm6.8") cc.m = 1 > c.s / c.beta0 ? 1 : static_cast<int>(std::ceil(c.s / c.beta0)) + 1;
  if (claim == "thm7.8" || claim == "prop7.9") cc.family = Family::F;
  return cc;
}

PipelineResult run_pipeline(const std::string& space_file, const std::string& workspace, const PipelineConfig& config,
                            bool force) {
  PipelineResult result;
  fs::create_directories(workspace);
  Stager st{workspace, force, nlohmann::json::object(), &result};
  const std::string mpath = st.path("manifest.json");
  if (fs::exists(mpath)) {
    try {
      st.manifest = read_json(mpath);
    } catch (const Error&) {
      st.manifest = nlohmann::json::object();
    }
  }
  const nlohmann::json params = to_json(config);
  st.manifest["format"] = 1;
  st.manifest["parameters"] = params;
  if (!st.manifest.contains("stages")) st.manifest["stages"] = nlohmann::json::object();

  // space
  const std::string input_bytes = in_stage("space", [&] { return read_file(space_file); });
  const std::string space_key = hash_json({{"input", git_blob_hash(input_bytes)}, {"laplacian", config.laplacian}});
  if (!st.cached("space", space_key)) {
    in_stage("space", [&] {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(input_bytes);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedInput, "'" + space_file + "': " + e.what());
      }
      SpaceFile sf = parse_space(doc);
      Eigen::MatrixXd op;
      std::string lap = sf.laplacian;
      if (sf.op) {
        op = *sf.op;
        if (lap.empty()) lap = "user";
      } else {
        lap = config.laplacian;
        op = make_laplacian(lap, adjacency_from_metric(sf.space), sf.space.mu());
      }
      st.record("space", space_key, {{"space.json", dump_json(space_to_json(sf.space, op, lap, sf.metadata))}});
      return 0;
    });
  }
  const std::string space_hash = st.output_hash("space", "space.json");
  const SpaceFile sf = in_stage("space", [&] { return parse_space(read_json(st.path("space.json"))); });

  // cubes
  const std::string cubes_key = hash_json({{"space", space_hash},
                                           {"delta", config.delta},
                                           {"seed", config.seed},
                                           {"j0", config.j0},
                                           {"eps0", config.eps0},
                                           {"sample_rule", to_string(config.sample_rule)}});
  if (!st.cached("cubes", cubes_key)) {
    in_stage("cubes", [&] {
      const CubeSystem cubes = build_cubes(sf.space, config.delta, config.seed);
      const SubcubeGrid grid = subcube_grid(cubes, config.j0, config.eps0, config.sample_rule, config.seed);
      const nlohmann::json doc = {
          {"cubes", to_json(cubes)}, {"grid", to_json(grid)}, {"axioms", to_json(verify_cube_axioms(cubes, sf.space))}};
      st.record("cubes", cubes_key, {{"cubes.json", dump_json(doc)}});
      return 0;
    });
  }
  const std::string cubes_hash = st.output_hash("cubes", "cubes.json");

  // calib
  const std::string calib_key = hash_json(
      {{"space", space_hash}, {"delta", config.delta}, {"beta0", config.beta0}, {"glue", config.glue_exponent}});
  if (!st.cached("calib", calib_key)) {
    in_stage("calib", [&] {
      const SpectralOperator op = eigendecompose(sf.space, *sf.op, sf.laplacian);
      const BumpPair bumps = make_bump_pair(config.delta, config.beta0, config.glue_exponent);
      const LPCalibration calib = build_calibration(op, bumps);
      st.record("calib", calib_key, {{"calib.bin", encode_binary(calibration_to_artifact(calib), kCalibMagic)}});
      return 0;
    });
  }
  const std::string calib_hash = st.output_hash("calib", "calib.bin");

  // frame
  const std::string frame_key = hash_json({{"calib", calib_hash}, {"cubes", cubes_hash}, {"tol", config.tol}});
  if (!st.cached("frame", frame_key)) {
    in_stage("frame", [&] {
      const LPCalibration calib =
          calibration_from_artifact(decode_binary(read_file(st.path("calib.bin")), kCalibMagic, "calib.bin"));
      const SubcubeGrid grid = grid_from_json(read_json(st.path("cubes.json")).at("grid"));
      const SynthesisFrame frame = build_synthesis_frame(calib, grid, config.tol);
      st.record("frame", frame_key, {{"frame.bin", encode_binary(frame_to_artifact(frame, grid), kFrameMagic)}});
      return 0;
    });
  }

  if (config.verify) {
    const std::string frame_hash = st.output_hash("frame", "frame.bin");
    const std::string verify_key =
        hash_json({{"space", space_hash}, {"cubes", cubes_hash}, {"calib", calib_hash}, {"frame", frame_hash},
                   {"parameters", params}});
    if (!st.cached("verify", verify_key)) {
      in_stage("verify", [&] {
        const Workspace ws = load_workspace(workspace);
        const std::string tmp = st.path("reports.tmp");
        fs::remove_all(tmp);
        verify_workspace(ws, tmp, config.claims.empty() ? claim_ids() : config.claims);
        std::vector<std::pair<std::string, std::string>> files;
        std::vector<fs::path> entries;
        for (const auto& e : fs::directory_iterator(tmp)) entries.push_back(e.path());
        std::sort(entries.begin(), entries.end());
        for (const auto& e : entries) files.push_back({"reports/" + e.filename().string(), read_file(e.string())});
        fs::remove_all(tmp);
        st.record("verify", verify_key, files);
        return 0;
      });
    }
  }
  result.manifest = st.manifest;
  return result;
}

Workspace load_workspace(const std::string& dir) {
  const nlohmann::json manifest = read_json((fs::path(dir) / "manifest.json").string());
  auto checked = [&](const std::string& stage, const std::string& rel) -> std::optional<std::string> {
    const fs::path p = fs::path(dir) / rel;
    if (!manifest.contains("stages") || !manifest["stages"].contains(stage) || !fs::exists(p)) return std::nullopt;
    std::string bytes = read_file(p.string());
    if (git_blob_hash(bytes) != manifest["stages"][stage]["outputs"].value(rel, std::string()))
      throw Error(ErrorKind::HashMismatch, "'" + rel + "' does not match the hash recorded in the manifest");
    return bytes;
  };
  const auto space_bytes = checked("space", "space.json");
  if (!space_bytes) throw Error(ErrorKind::PrerequisiteMissing, "workspace has no space.json");
  Workspace ws{dir, manifest, parse_space(nlohmann::json::parse(*space_bytes)), {}, {}, {}, {}, {}};
  ws.config = parse_pipeline_config(manifest.at("parameters"));
  if (const auto cb = checked("cubes", "cubes.json")) {
    const nlohmann::json doc = nlohmann::json::parse(*cb);
    ws.cubes = cubes_from_json(doc.at("cubes"), ws.space.space);
    ws.grid = grid_from_json(doc.at("grid"));
  } else {
    throw Error(ErrorKind::PrerequisiteMissing, "workspace has no cubes.json");
  }
  if (const auto cb = checked("calib", "calib.bin"))
    ws.calib = calibration_from_artifact(decode_binary(*cb, kCalibMagic, "calib.bin"));
  if (const auto fb = checked("frame", "frame.bin"))
    ws.frame = frame_from_artifact(decode_binary(*fb, kFrameMagic, "frame.bin"));
  return ws;
}

std::vector<EquivalenceReport> verify_workspace(const Workspace& ws, const std::string& out_dir,
                                                const std::vector<std::string>& claims) {
  if (!ws.calib) throw Error(ErrorKind::PrerequisiteMissing, "workspace has no calibration");
  VerifyContext ctx;
  ctx.space = &ws.space.space;
  ctx.cubes = &ws.cubes;
  ctx.calib = &*ws.calib;
  ctx.grid = &ws.grid;
  ctx.frame = ws.frame ? &*ws.frame : nullptr;
  ctx.d = ws.config.d ? *ws.config.d : homogeneous_dimension(ws.space.space);
  ctx.battery = make_battery(ws.calib->op, ws.calib->bumps, ws.config.seed, ws.config.battery_size);

  nlohmann::json inputs = nlohmann::json::object();
  if (ws.manifest.contains("stages"))
    for (const auto& [stage, rec] : ws.manifest["stages"].items())
      if (stage != "verify")
        for (const auto& [rel, h] : rec.at("outputs").items()) inputs[rel] = h;

  const int n = static_cast<int>(claims.size());
  std::vector<std::optional<EquivalenceReport>> reports(static_cast<std::size_t>(n));
  std::vector<std::string> status(static_cast<std::size_t>(n)), reason(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    try {
      reports[u] = run_equivalence(claims[u], ctx, default_claim_config(claims[u], ws.config));
      status[u] = "ok";
    } catch (const Error& e) {
      status[u] = e.kind() == ErrorKind::HypothesisViolated
                      ? "refused"
                      : (e.kind() == ErrorKind::PrerequisiteMissing ? "missing" : "error");
      reason[u] = e.what();
    }
  }

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv.precision(17);
  csv << "claim,status,functions,min_ratio,max_ratio,spread,norm_a,norm_b\n";
  std::vector<EquivalenceReport> out;
  for (int i = 0; i < n; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    nlohmann::json doc;
    if (reports[u]) {
      doc = to_json(*reports[u]);
      csv << claims[u] << ',' << status[u] << ',' << reports[u]->ratios.size() << ',' << reports[u]->min_ratio << ','
          << reports[u]->max_ratio << ',' << reports[u]->spread << ",\"" << reports[u]->norm_a << "\",\""
          << reports[u]->norm_b << "\"\n";
      out.push_back(*reports[u]);
    } else {
      doc = {{"claim", claims[u]}, {"reason", reason[u]}};
      csv << claims[u] << ',' << status[u] << ",0,,,,,\n";
    }
    doc["status"] = status[u];
    doc["inputs"] = inputs;
    write_file((fs::path(out_dir) / (claims[u] + ".json")).string(), dump_json(doc));
  }
  write_file((fs::path(out_dir) / "summary.csv").string(), csv.str());
  return out;
}

}  // namespace hkframe
