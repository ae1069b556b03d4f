#include "helpers.hpp"

#include "hkframe/error.hpp"
#include "hkframe/verify.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace hkframe;

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

struct Fixture {
  hkt::Setup st = hkt::scaled_setup("cycle(32)", 0.1);
  SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
  SynthesisFrame frame = build_synthesis_frame(st.calib, grid);

  VerifyContext context(int battery = 12) const {
    VerifyContext ctx;
    ctx.space = &st.space();
    ctx.cubes = &st.cubes;
    ctx.calib = &st.calib;
    ctx.grid = &grid;
    ctx.frame = &frame;
    ctx.battery = make_battery(st.op, st.calib.bumps, 0, battery);
    ctx.d = 1.0;
    return ctx;
  }
};

}  // namespace

TEST_CASE("battery") {
  const hkt::Setup st = hkt::setup("cycle(64)");
  const FunctionBattery a = make_battery(st.op, st.calib.bumps, 3, 20);
  const FunctionBattery b = make_battery(st.op, st.calib.bumps, 3, 20);
  REQUIRE(a.functions.size() == 20);
  std::set<std::string> names;
  for (std::size_t i = 0; i < a.functions.size(); ++i) {
    CHECK(a.functions[i].values == b.functions[i].values);
    CHECK(std::sqrt(a.functions[i].values.cwiseAbs2().dot(st.op.mu)) == doctest::Approx(1.0).epsilon(1e-12));
    names.insert(a.functions[i].name);
  }
  CHECK(names.size() == 20);
  // every band with spectrum under it has a member concentrated there
  for (int j = 0; j <= st.calib.J_max; ++j) {
    bool populated = false;
    for (Eigen::Index i = 0; i < st.op.size(); ++i) populated |= st.calib.bumps.level(j, st.calib.spectral_grid(i)) > 0;
    if (!populated) continue;
    bool hit = false;
    for (const auto& bf : a.functions) {
      const Eigen::VectorXd Mf = st.calib.level(j) * bf.values.cwiseProduct(st.op.mu);
      hit |= std::sqrt(Mf.cwiseAbs2().dot(st.op.mu)) > 0.5;
    }
    CHECK(hit);
  }
  CHECK_THROWS_AS(make_battery(st.op, st.calib.bumps, 0, 4), Error);
  const FunctionBattery c = make_battery(st.op, st.calib.bumps, 4, 20);
  CHECK(c.functions.back().values != a.functions.back().values);
}

TEST_CASE("every claim runs and gives finite spreads") {
  const Fixture fx;
  const VerifyContext ctx = fx.context();
  for (const auto& id : claim_ids()) {
    CAPTURE(id);
    ClaimConfig cfg;
    if (id == "prop4.9") cfg.tau = 1.0;
    if (id == "prop4.10") cfg.tau = 0.5;
    if (id == "thm7.8" || id == "prop7.9") cfg.family = Family::F;
    const EquivalenceReport r = run_equivalence(id, ctx, cfg);
    CHECK(r.claim == id);
    CHECK(r.ratios.size() == ctx.battery.functions.size());
    CHECK(std::isfinite(r.spread));
    CHECK(r.spread >= 1.0);
    CHECK(r.min_ratio > 0.0);
    const nlohmann::json j = to_json(r);
    CHECK(j["claim"] == id);
    if (id == "thm7.5") CHECK(j["extra"]["max_reconstruction_error"].get<double>() <= 1e-6);
    if (id == "prop4.10") CHECK(j["extra"]["nonnegative_le_full"].get<bool>());
  }
}

TEST_CASE("claims refuse configurations outside their hypotheses") {
  const Fixture fx;
  const VerifyContext ctx = fx.context(6);
  ClaimConfig cfg;
  cfg.tau = 0.5;  // = 1/p, not above it
  CHECK(kind_of([&] { run_equivalence("prop4.9", ctx, cfg); }) == ErrorKind::HypothesisViolated);
  cfg.tau = 0.25;
  CHECK(kind_of([&] { run_equivalence("prop4.10", ctx, cfg); }) == ErrorKind::HypothesisViolated);
  ClaimConfig heat;
  heat.s = 2.0;
  heat.m = 1;
  CHECK(kind_of([&] { run_equivalence("thm6.7", ctx, heat); }) == ErrorKind::HypothesisViolated);
  ClaimConfig cont;
  cont.p = 0.5;
  CHECK(kind_of([&] { run_equivalence("thm6.8", ctx, cont); }) == ErrorKind::HypothesisViolated);
  ClaimConfig peetre;
  SpaceParams sp;
  sp.p = peetre.p;
  sp.q = peetre.q;
  sp.tau = peetre.tau;
  peetre.a = peetre_threshold(sp, 1.0);
  CHECK(kind_of([&] { run_equivalence("thm6.2", ctx, peetre); }) == ErrorKind::HypothesisViolated);
  CHECK(kind_of([&] { run_equivalence("no-such-claim", ctx, ClaimConfig{}); }) == ErrorKind::InvalidParams);
}

TEST_CASE("missing artifacts") {
  const Fixture fx;
  VerifyContext ctx = fx.context(6);
  ctx.frame = nullptr;
  CHECK(kind_of([&] { run_equivalence("thm7.5", ctx, ClaimConfig{}); }) == ErrorKind::PrerequisiteMissing);
  ctx.grid = nullptr;
  CHECK(kind_of([&] { run_equivalence("prop7.9", ctx, ClaimConfig{}); }) == ErrorKind::PrerequisiteMissing);
  VerifyContext empty = fx.context(6);
  empty.battery.functions.clear();
  CHECK(kind_of([&] { run_equivalence("thm6.2", empty, ClaimConfig{}); }) == ErrorKind::PrerequisiteMissing);
  empty = fx.context(6);
  empty.calib = nullptr;
  CHECK(kind_of([&] { run_equivalence("thm6.2", empty, ClaimConfig{}); }) == ErrorKind::PrerequisiteMissing);
}

TEST_CASE("report summary fields") {
  EquivalenceReport r;
  r.ratios = {2.0, 0.5, 1.0};
  r.finish();
  CHECK(r.min_ratio == 0.5);
  CHECK(r.max_ratio == 2.0);
  CHECK(r.spread == 4.0);
  r.ratios = {1.0, std::numeric_limits<double>::infinity()};
  r.finish();
  CHECK(std::isinf(r.spread));
  CHECK(to_json(r)["spread"] == "inf");
}

TEST_CASE("Peetre domination") {
  const Fixture fx;
  const auto& st = fx.st;
  CHECK(peetre_domination_check(Eigen::VectorXd::Zero(32), st.calib, st.space(), 1.0, 1.0, 1.0) == 0.0);
  for (int t = 0; t < 3; ++t) {
    const double C = peetre_domination_check(hkt::random_vector(32, t), st.calib, st.space(), 1.0, 1.0, 1.0);
    CHECK(std::isfinite(C));
    CHECK(C > 0.0);
  }
  // one point: both sides are |M_l f| and the j = l term alone already matches
  nlohmann::json doc = {{"points", {"x"}}, {"distance_matrix", {{0}}}};
  const auto one = load_space(doc);
  const SpectralOperator op = eigendecompose(one, Eigen::MatrixXd::Zero(1, 1));
  const LPCalibration c = build_calibration(op, make_bump_pair(0.5, 2.0));
  Eigen::VectorXd f(1);
  f << 2.0;
  CHECK(peetre_domination_check(f, c, one, 1.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(peetre_domination_check(f, c, one, 1.0, 0.0, 1.0), Error);
}

TEST_CASE("composition constant") {
  const Fixture fx;
  for (int j = 0; j <= fx.st.calib.J_max; ++j) {
    const double C = composition_constant(fx.st.space(), fx.grid, j, 0.5, 1.0, 0.5);
    CHECK(std::isfinite(C));
    CHECK(C > 0.0);
  }
}
