#include "helpers.hpp"

#include "hkframe/error.hpp"
#include "hkframe/frame.hpp"
#include "hkframe/io.hpp"
#include "hkframe/pipeline.hpp"

#include <doctest.h>

#include <filesystem>
#include <limits>

using namespace hkframe;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::MalformedInput;
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("hkframe_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

std::string write_generated(const TempDir& dir, const std::string& kind) {
  const std::string p = dir / "space.json";
  write_file(p, dump_json(generate(parse_generator(kind))));
  return p;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  return out;
}

PipelineConfig quick_config() {
  PipelineConfig c;
  c.battery_size = 6;
  c.claims = {"thm6.2", "thm7.5"};
  return c;
}

}  // namespace

TEST_CASE("binary container round trip and corruption") {
  BinaryArtifact a;
  a.meta = {{"name", "x"}, {"levels", 2}};
  Eigen::MatrixXd m(2, 3);
  m << 1, -2.5, 3e-300, std::numeric_limits<double>::denorm_min(), -0.0, 1e300;
  a.matrices = {m, Eigen::MatrixXd(0, 4), Eigen::MatrixXd::Identity(3, 3)};
  const std::string bytes = encode_binary(a, kCalibMagic);
  CHECK(bytes.compare(0, 16, kCalibMagic) == 0);
  const BinaryArtifact b = decode_binary(bytes, kCalibMagic);
  CHECK(b.meta == a.meta);
  REQUIRE(b.matrices.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(b.matrices[i].rows() == a.matrices[i].rows());
    CHECK(b.matrices[i].cols() == a.matrices[i].cols());
    CHECK(b.matrices[i] == a.matrices[i]);
  }
  CHECK(std::signbit(b.matrices[0](1, 1)));
  CHECK(encode_binary(b, kCalibMagic) == bytes);

  CHECK(kind_of([&] { decode_binary(bytes, kFrameMagic); }) == ErrorKind::MalformedInput);
  for (std::size_t cut : {std::size_t{0}, std::size_t{10}, std::size_t{20}, bytes.size() - 1})
    CHECK(kind_of([&] { decode_binary(bytes.substr(0, cut), kCalibMagic); }) == ErrorKind::MalformedInput);
  CHECK(kind_of([&] { decode_binary(bytes + "x", kCalibMagic); }) == ErrorKind::MalformedInput);
  CHECK(error_text([&] { decode_binary("junk", kCalibMagic, "calib.bin"); }).find("calib.bin") != std::string::npos);
}

TEST_CASE("calibration and frame artifacts round trip") {
  const hkt::Setup st = hkt::scaled_setup("cycle(32)", 0.1);
  const BinaryArtifact ca = calibration_to_artifact(st.calib);
  const LPCalibration c = calibration_from_artifact(decode_binary(encode_binary(ca, kCalibMagic), kCalibMagic));
  CHECK(c.J_max == st.calib.J_max);
  CHECK(c.delta() == st.calib.delta());
  CHECK(c.beta0() == st.calib.beta0());
  CHECK(c.spectral_grid == st.calib.spectral_grid);
  for (int j = 0; j <= c.J_max; ++j) {
    CHECK(c.level(j) == st.calib.level(j));
    CHECK(c.dual_ops[static_cast<std::size_t>(j)] == st.calib.dual_ops[static_cast<std::size_t>(j)]);
  }
  CHECK(c.bumps.level(2, 3.7) == st.calib.bumps.level(2, 3.7));

  const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
  const SynthesisFrame frame = build_synthesis_frame(st.calib, grid);
  const std::string bytes = encode_binary(frame_to_artifact(frame, grid), kFrameMagic);
  const BinaryArtifact fa = decode_binary(bytes, kFrameMagic);
  const SynthesisFrame f = frame_from_artifact(fa);
  const SubcubeGrid g = frame_grid_from_artifact(fa);
  REQUIRE(f.levels.size() == frame.levels.size());
  for (std::size_t j = 0; j < f.levels.size(); ++j) {
    CHECK(f.levels[j].psi == frame.levels[j].psi);
    CHECK(f.levels[j].samples == frame.levels[j].samples);
    CHECK(f.levels[j].measures == frame.levels[j].measures);
  }
  CHECK(g.j_lo == grid.j_lo);
  CHECK(g.j_hi == grid.j_hi);
  const Eigen::VectorXd x = hkt::random_vector(32, 5);
  const Eigen::VectorXd a = synthesis(analysis(x, st.calib, grid), frame);
  const Eigen::VectorXd b = synthesis(analysis(x, c, g), f);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(encode_binary(frame_to_artifact(f, g), kFrameMagic) == bytes);
}

TEST_CASE("git blob hash") {
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("json dump is sorted and newline-terminated") {
  const std::string s = dump_json({{"b", 1}, {"a", {{"d", 2}, {"c", 3}}}});
  CHECK(s.back() == '\n');
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("\"c\"") < s.find("\"d\""));
  CHECK(s.find("\n  \"a\"") != std::string::npos);
}

TEST_CASE("read_file on a missing path") {
  CHECK(kind_of([] { read_file("/nonexistent/hkframe/x.json"); }) == ErrorKind::PrerequisiteMissing);
}

TEST_CASE("generator sizes and metrics") {
  auto edges = [](const std::string& k) { return generate_graph(parse_generator(k)).edges.size(); };
  auto points = [](const std::string& k) { return generate_graph(parse_generator(k)).ids.size(); };
  CHECK(points("gasket(1)") == 6);
  CHECK(edges("gasket(1)") == 9);
  CHECK(points("gasket(2)") == 15);
  CHECK(edges("gasket(2)") == 27);
  CHECK(points("gasket(3)") == 42);
  CHECK(points("path(2)") == 2);
  CHECK(edges("path(2)") == 1);
  CHECK(points("cycle(8)") == 8);
  CHECK(edges("cycle(8)") == 8);
  CHECK(points("torus(4,5)") == 20);
  CHECK(edges("torus(4,5)") == 40);
  CHECK(points("binary_tree(3)") == 15);
  CHECK(edges("binary_tree(3)") == 14);
  CHECK(points("random_geometric(30,0.4,3)") == 30);

  // graph metric against Floyd-Warshall on the edge list
  for (const char* k : {"cycle(8)", "torus(3,4)", "gasket(2)", "binary_tree(3)", "random_geometric(25,0.4,1)"}) {
    CAPTURE(k);
    const GeneratedGraph gg = generate_graph(parse_generator(k));
    const auto n = static_cast<Eigen::Index>(gg.ids.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    d.diagonal().setZero();
    for (const auto& e : gg.edges) d(e.a, e.b) = d(e.b, e.a) = std::min(d(e.a, e.b), e.w);
    for (Eigen::Index m = 0; m < n; ++m)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, m) + d(m, j));
    const SpaceFile sf = parse_space(generate(parse_generator(k)));
    CHECK((sf.space.rho() - d).cwiseAbs().maxCoeff() == 0.0);
    // Laplacian kills constants and is symmetric
    const Eigen::MatrixXd& L = *sf.op;
    CHECK((L * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((L - L.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  // same seed, same graph
  CHECK(generate(parse_generator("random_geometric(20,0.5,9)")) == generate(parse_generator("random_geometric(20,0.5,9)")));
}

TEST_CASE("generator parse errors") {
  for (const char* bad : {"cycle", "cycle(", "cycle(x)", "hexagon(3)", "torus(4)", "cycle(8) extra"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_generator(bad), Error);
  }
  for (const char* bad : {"cycle(1)", "path(1)", "gasket(8)", "binary_tree(0)", "torus(1,5)", "random_geometric(1,0.3,1)"}) {
    CAPTURE(bad);
    CHECK(kind_of([&] { generate_graph(parse_generator(bad)); }) == ErrorKind::InvalidSize);
  }
}

TEST_CASE("pipeline caching, hash checks and determinism") {
  TempDir dir("pipe");
  const std::string space = write_generated(dir, "cycle(16)");
  const PipelineConfig cfg = quick_config();

  const PipelineResult first = run_pipeline(space, dir / "ws", cfg);
  CHECK(first.cached.empty());
  CHECK(std::find(first.executed.begin(), first.executed.end(), "frame") != first.executed.end());
  for (const char* f : {"manifest.json", "space.json", "cubes.json", "calib.bin", "frame.bin"})
    CHECK(fs::exists(dir.path / "ws" / f));

  const PipelineResult second = run_pipeline(space, dir / "ws", cfg);
  CHECK(second.executed.empty());
  CHECK(second.cached.size() >= 4);

  // a changed parameter reruns from the first affected stage
  PipelineConfig other = cfg;
  other.tol = 1e-10;
  const PipelineResult third = run_pipeline(space, dir / "ws", other);
  CHECK(std::find(third.cached.begin(), third.cached.end(), "calib") != third.cached.end());
  CHECK(std::find(third.executed.begin(), third.executed.end(), "frame") != third.executed.end());

  // two fresh runs are byte-identical
  run_pipeline(space, dir / "a", cfg);
  run_pipeline(space, dir / "b", cfg);
  CHECK(snapshot(dir.path / "a") == snapshot(dir.path / "b"));

  // corrupt an artifact
  const std::string cubes = dir / "a/cubes.json";
  write_file(cubes, read_file(cubes) + " ");
  const std::string msg = error_text([&] { run_pipeline(space, dir / "a", cfg); });
  CHECK(msg.find("HashMismatch") != std::string::npos);
  CHECK(msg.find("cubes.json") != std::string::npos);
  CHECK(kind_of([&] { load_workspace(dir / "a"); }) == ErrorKind::HashMismatch);
  // force recomputes and heals it
  CHECK(run_pipeline(space, dir / "a", cfg, true).cached.empty());
  CHECK(snapshot(dir.path / "a") == snapshot(dir.path / "b"));

  const Workspace ws = load_workspace(dir / "b");
  CHECK(ws.calib.has_value());
  CHECK(ws.frame.has_value());
  CHECK(ws.space.space.size() == 16);
  const auto reports = verify_workspace(ws, dir / "out", {"thm6.2"});
  CHECK(reports.size() == 1);
  CHECK(fs::exists(dir.path / "out" / "thm6.2.json"));
  CHECK(fs::exists(dir.path / "out" / "summary.csv"));
}

TEST_CASE("pipeline errors name the stage") {
  TempDir dir("pipe_err");
  const std::string space = write_generated(dir, "cycle(8)");
  PipelineConfig cfg = quick_config();
  cfg.delta = 1.5;
  const std::string msg = error_text([&] { run_pipeline(space, dir / "ws", cfg); });
  CHECK(msg.find("stage '") != std::string::npos);
  try {
    run_pipeline(space, dir / "ws", cfg);
  } catch (const StageError& e) {
    CHECK(e.kind() == ErrorKind::InvalidDelta);
    CHECK(!e.stage().empty());
  }
  CHECK(kind_of([&] { run_pipeline(dir / "missing.json", dir / "ws2", quick_config()); }) ==
        ErrorKind::PrerequisiteMissing);
  CHECK(kind_of([&] { load_workspace(dir / "nowhere"); }) == ErrorKind::PrerequisiteMissing);
}

TEST_CASE("pipeline config parsing") {
  const PipelineConfig c = parse_pipeline_config({{"delta", 0.4}, {"j0", 2}, {"claims", {"thm6.2"}}, {"d", 1.5}});
  CHECK(c.delta == 0.4);
  CHECK(c.j0 == 2);
  CHECK(c.claims == std::vector<std::string>{"thm6.2"});
  CHECK(c.d.value() == 1.5);
  CHECK(parse_pipeline_config(to_json(c)).delta == 0.4);
  CHECK(kind_of([] { parse_pipeline_config({{"detla", 0.4}}); }) == ErrorKind::MalformedInput);
  CHECK(kind_of([] { parse_pipeline_config({{"delta", "half"}}); }) == ErrorKind::MalformedInput);
  PipelineConfig base;
  base.p = 4.0;
  CHECK(default_claim_config("prop4.9", base).tau == doctest::Approx(0.5));
  CHECK(default_claim_config("prop4.10", base).tau == doctest::Approx(0.25));
}
