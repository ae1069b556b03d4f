#include "helpers.hpp"

#include "hkframe/error.hpp"
#include "hkframe/frame.hpp"
#include "hkframe/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace hkframe;

namespace {

double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& mu) {
  return std::sqrt((a - b).cwiseAbs2().dot(mu) / b.cwiseAbs2().dot(mu));
}

const double kInf = std::numeric_limits<double>::infinity();

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::MalformedInput;
}

// smallest K with r^{K+1} / (1 - r) <= tol, counted up from 0
int neumann_oracle(double r, double tol) {
  int K = 0;
  double t = r / (1 - r);
  while (t > tol) {
    t *= r;
    ++K;
  }
  return K;
}

}  // namespace

TEST_CASE("Neumann term count") {
  CHECK(neumann_terms_needed(0.0, 1e-12) == 0);
  CHECK(neumann_terms_needed(1.0, 1e-12) == -1);
  for (double r : {0.01, 0.1, 0.3, 0.5, 0.9})
    for (double tol : {1e-3, 1e-8, 1e-12}) {
      CAPTURE(r);
      CAPTURE(tol);
      CHECK(neumann_terms_needed(r, tol) == neumann_oracle(r, tol));
    }
  // with r = 1/2 the tail after K terms is 2^{-K}
  const int K = neumann_terms_needed(0.5, 1e-12);
  CHECK(std::pow(0.5, K) <= 1e-12);
  CHECK(std::pow(0.5, K - 1) > 1e-12);
}

TEST_CASE("reconstruction on singleton grids") {
  for (const char* kind : {"cycle(64)", "gasket(3)"}) {
    CAPTURE(kind);
    const hkt::Setup st = hkt::setup(kind);
    const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
    const SynthesisFrame fr = build_synthesis_frame(st.calib, grid, 1e-12);
    for (const auto& lvl : fr.levels) {
      CHECK(lvl.residual_norm < 1.0);
      CHECK(lvl.neumann_terms <= 40);
      CHECK(lvl.tail_bound <= 1e-12);
    }
    const FunctionBattery b = make_battery(st.op, st.calib.bumps, 0, 20);
    for (const auto& bf : b.functions) {
      const Eigen::VectorXd back = synthesis(analysis(bf.values, st.calib, grid), fr);
      CHECK(rel_l2(back, bf.values, st.op.mu) <= std::max(10 * fr.total_tail(), 1e-6));
    }
  }
}

TEST_CASE("reconstruction on a grid coarser than the points") {
  const hkt::Setup st = hkt::scaled_setup("cycle(32)", 0.1);
  const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
  bool nontrivial = false;
  for (int j = 0; j <= st.calib.J_max; ++j)
    for (const auto& sc : grid.level(j).subcubes) nontrivial |= sc.members.size() > 1;
  REQUIRE(nontrivial);
  const SynthesisFrame fr = build_synthesis_frame(st.calib, grid, 1e-12);
  CHECK(fr.max_residual() < 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd f = hkt::random_vector(32, 70 + trial);
    CHECK(reconstruction_error(f, st.calib, grid, fr) <= std::max(10 * fr.total_tail(), 1e-6));
  }
}

TEST_CASE("analysis is linear and respects spectral supports") {
  const hkt::Setup st = hkt::scaled_setup("cycle(32)", 0.1);
  const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
  const Eigen::VectorXd f = hkt::random_vector(32, 1), g = hkt::random_vector(32, 2);
  const FrameCoefficients a = analysis(f, st.calib, grid), b = analysis(g, st.calib, grid),
                          c = analysis(f + g, st.calib, grid);
  for (int j = 0; j < c.levels(); ++j)
    for (std::size_t i = 0; i < c.values[static_cast<std::size_t>(j)].size(); ++i)
      CHECK(c.values[static_cast<std::size_t>(j)][i] ==
            doctest::Approx(a.values[static_cast<std::size_t>(j)][i] + b.values[static_cast<std::size_t>(j)][i])
                .epsilon(1e-12)
                .scale(1.0));
  const FrameCoefficients z = analysis(Eigen::VectorXd::Zero(32), st.calib, grid);
  for (const auto& lv : z.values)
    for (double v : lv) CHECK(v == 0.0);
  // an eigenvector only shows up in the bands whose profile is nonzero at its eigenvalue
  for (Eigen::Index i = 1; i < st.op.size(); i += 5) {
    const Eigen::VectorXd u = st.op.eigenvectors.col(i);
    const FrameCoefficients e = analysis(u, st.calib, grid);
    for (int j = 0; j < e.levels(); ++j)
      if (st.calib.bumps.level(j, st.calib.spectral_grid(i)) == 0.0)
        for (double v : e.values[static_cast<std::size_t>(j)]) CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("synthesis rejects mismatched coefficients") {
  const hkt::Setup st = hkt::setup("cycle(16)");
  const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
  const SynthesisFrame fr = build_synthesis_frame(st.calib, grid);
  FrameCoefficients c = analysis(hkt::random_vector(16, 3), st.calib, grid);
  c.values.pop_back();
  c.measures.pop_back();
  c.samples.pop_back();
  CHECK(kind_of([&] { synthesis(c, fr); }) == ErrorKind::IndexMismatch);
  FrameCoefficients zero = analysis(Eigen::VectorXd::Zero(16), st.calib, grid);
  CHECK(synthesis(zero, fr).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sequence norm") {
  const hkt::Setup st = hkt::scaled_setup("cycle(32)", 0.1);
  const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
  FrameCoefficients c = analysis(Eigen::VectorXd::Zero(32), st.calib, grid);
  SpaceParams sp;
  sp.p = sp.q = 2;
  sp.d = 1.0;
  CHECK(sequence_norm(c, grid, st.space(), st.cubes, sp).value == 0.0);
  for (int j : {0, 1, 2}) {
    FrameCoefficients one = c;
    const std::size_t i = one.values[static_cast<std::size_t>(j)].size() / 2;
    one.values[static_cast<std::size_t>(j)][i] = 1.0;
    const double m = grid.level(j).subcubes[i].measure;
    CHECK(sequence_norm(one, grid, st.space(), st.cubes, sp).value == doctest::Approx(std::sqrt(m)).epsilon(1e-14));
  }
  const FrameCoefficients a = analysis(hkt::random_vector(32, 5), st.calib, grid);
  for (double p : {0.5, 1.0, 2.0})
    for (Variant v : {Variant::Plain, Variant::Tilde}) {
      sp.p = sp.q = p;
      sp.tau = 0.3;
      sp.s = 0.5;
      sp.variant = v;
      sp.family = Family::B;
      const double b = sequence_norm(a, grid, st.space(), st.cubes, sp).value;
      sp.family = Family::F;
      CHECK(sequence_norm(a, grid, st.space(), st.cubes, sp).value == b);
    }
}

TEST_CASE("quartile threshold against a sort-based oracle") {
  // inf{lambda > 0 : mass{g > lambda} < total/4}, tried at 0 and every value
  auto oracle = [](const std::vector<std::pair<double, double>>& vm, double total) {
    std::vector<double> cands{0.0};
    for (auto [v, m] : vm) cands.push_back(v);
    std::sort(cands.begin(), cands.end());
    for (double c : cands) {
      double above = 0;
      for (auto [v, m] : vm)
        if (v > c) above += m;
      if (above < total / 4) return c;
    }
    return cands.back();
  };
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> val(0, 6), cnt(1, 12);
  std::uniform_real_distribution<double> mass(0.1, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::pair<double, double>> vm;
    double total = 0;
    const int n = cnt(rng);
    for (int i = 0; i < n; ++i) {
      vm.emplace_back(val(rng) * 0.5, mass(rng));
      total += vm.back().second;
    }
    CHECK(quartile_threshold(vm, total) == oracle(vm, total));
  }
  CHECK(quartile_threshold({}, 1.0) == 0.0);
  CHECK(quartile_threshold({{3.0, 1.0}}, 1.0) == 3.0);
}

TEST_CASE("stopping functional by enumeration") {
  const hkt::Setup st = hkt::scaled_setup("cycle(32)", 0.1);
  const auto& s = st.space();
  const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
  const FrameCoefficients z = analysis(Eigen::VectorXd::Zero(32), st.calib, grid);
  CHECK(stopping_functional(z, grid, s, 0.5, 2.0).cwiseAbs().maxCoeff() == 0.0);
  const FrameCoefficients a = analysis(hkt::random_vector(32, 8), st.calib, grid);
  const int J = a.levels();
  for (double q : {1.0, 2.0}) {
    const Eigen::VectorXd m = stopping_functional(a, grid, s, 0.5, q, Variant::Plain, 1.0, 0.5);
    Eigen::VectorXd brute = Eigen::VectorXd::Zero(32);
    for (int k = 0; k < J; ++k)
      for (const Subcube& Q : grid.level(k).subcubes) {
        // G_Q at each member, then the smallest candidate leaving less than a quarter of |Q| above it
        std::vector<double> g;
        for (Index x : Q.members) {
          double acc = 0;
          for (int j = k; j < J; ++j)
            for (std::size_t i = 0; i < grid.level(j).subcubes.size(); ++i) {
              const auto& mem = grid.level(j).subcubes[i].members;
              if (std::binary_search(mem.begin(), mem.end(), x))
                acc += std::pow(std::pow(2.0, 0.5 * j) * std::abs(a.values[static_cast<std::size_t>(j)][i]), q);
            }
          g.push_back(std::pow(acc, 1 / q));
        }
        std::vector<double> cands{0.0};
        cands.insert(cands.end(), g.begin(), g.end());
        std::sort(cands.begin(), cands.end());
        double thr = cands.back();
        for (double c : cands) {
          double above = 0;
          for (std::size_t t = 0; t < g.size(); ++t)
            if (g[t] > c) above += s.mu(Q.members[t]);
          if (above < Q.measure / 4) {
            thr = c;
            break;
          }
        }
        for (Index x : Q.members) brute(x) = std::max(brute(x), thr);
      }
    CHECK((m - brute).cwiseAbs().maxCoeff() <= 1e-12 * brute.maxCoeff());
  }
}

TEST_CASE("sampling check") {
  const hkt::Setup st = hkt::setup("cycle(64)");
  const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
  // singleton subcubes: the sampled sum is the integral
  for (double p : {1.0, 1.5, 2.0}) {
    const SamplingRatios r = mz_sampling_check(st.op, grid, 2, 1.0, p, 0.5, 2.0);
    CHECK(r.functions == 20);
    CHECK(std::abs(r.low - 1) <= 1e-12);
    CHECK(std::abs(r.high - 1) <= 1e-12);
  }
  CHECK(min_sampling_level(4.0, 0.5, 2.0) == 2);
  CHECK(min_sampling_level(1.0, 0.5, 2.0) == 0);
  CHECK(kind_of([&] { mz_sampling_check(st.op, grid, 1, 4.0, 2.0, 0.5, 2.0); }) == ErrorKind::LevelTooCoarse);
  CHECK(kind_of([&] { mz_sampling_check(st.op, grid, 3, 1.0, 3.0, 0.5, 2.0); }) == ErrorKind::InvalidParams);
  // the constant alone (band 0) is sampled exactly on any grid
  const hkt::Setup sc = hkt::scaled_setup("cycle(32)", 0.1);
  const SubcubeGrid g2 = subcube_grid(sc.cubes, 1, 0.1);
  const SamplingRatios r0 = mz_sampling_check(sc.op, g2, 0, 1e-6, 1.0, 0.5, 2.0);
  CHECK(r0.band_size == 1);
  CHECK(std::abs(r0.low - 1) <= 1e-12);
  CHECK(std::abs(r0.high - 1) <= 1e-12);
}

TEST_CASE("cubature weights") {
  SUBCASE("singleton subcubes give unit weights") {
    const hkt::Setup st = hkt::setup("cycle(32)");
    const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
    const CubatureResult c = cubature_weights(st.op, grid, 0, std::sqrt(st.op.eigenvalues(5)), 0.5, 2.0);
    CHECK((c.weights.array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(c.residual <= 1e-12);
    CHECK(c.mass_error <= 1e-10);
    CHECK(c.in_range_fraction == 1.0);
  }
  SUBCASE("coarser grid: moments matched with nonnegative weights") {
    const hkt::Setup st = hkt::scaled_setup("cycle(32)", 0.1);
    const SubcubeGrid grid = subcube_grid(st.cubes, 1, 0.1);
    const double band = std::sqrt(st.op.eigenvalues(2));
    const int j = std::max(0, min_sampling_level(band, 0.5, 2.0));
    bool nontrivial = false;
    for (const auto& sc : grid.level(j).subcubes) nontrivial |= sc.members.size() > 1;
    CHECK(nontrivial);
    const CubatureResult c = cubature_weights(st.op, grid, j, band, 0.5, 2.0);
    CHECK(c.moments >= 3);
    CHECK(c.weights.minCoeff() >= 0.0);
    CHECK(c.residual <= 1e-8);
    CHECK(c.mass_error <= 1e-10);
    // integrate a band-limited combination with the weights
    Eigen::VectorXd f = Eigen::VectorXd::Zero(32);
    for (int i = 0; i < c.moments; ++i) f += (i + 1.0) * st.op.eigenvectors.col(i);
    double quad = 0;
    for (std::size_t i = 0; i < c.samples.size(); ++i)
      quad += c.weights(static_cast<Eigen::Index>(i)) * c.measures[i] * f(static_cast<Eigen::Index>(c.samples[i]));
    CHECK(quad == doctest::Approx(f.dot(st.op.mu)).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("frame profiles") {
  FrameProfiles fp;
  fp.a = 0.5;
  CHECK(fp.window0(0.0) == 1.0);
  CHECK(fp.window0(2.0) == 1.0);
  CHECK(fp.window0(4.0) == 0.0);
  CHECK(fp.window(0.25) == 0.0);
  CHECK(fp.window(0.5) == 1.0);
  CHECK(fp.window(2.0) == 1.0);
  CHECK(fp.window(4.0) == 0.0);
  CHECK(fp.sampler(8.0) == 1.0);
  CHECK(fp.sampler(16.0) == 0.0);
  // the window is 1 wherever a bump of the same level lives
  const BumpPair b = make_bump_pair(0.5, 2.0);
  for (int i = 0; i <= 1000; ++i) {
    const double l = 6.0 * i / 1000.0;
    for (int j = 0; j < 4; ++j)
      if (b.level(j, l) != 0.0) CHECK(fp.window_level(j, l) == 1.0);
  }
}
