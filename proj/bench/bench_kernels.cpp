// Parallel kernels against their serial reference versions.
#include "hkframe/generate.hpp"
#include "hkframe/kernels.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace hkframe;

namespace {

struct Fixture {
  MetricMeasureSpace space;
  CubeSystem cubes;
  Eigen::MatrixXd samples;
  MixedNormProblem problem;
  Eigen::VectorXd g;
};

const Fixture& fixture(int n) {
  static std::map<int, Fixture> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GeneratorSpec spec;
  spec.kind = GeneratorKind::Torus;
  spec.n = n;
  spec.m = n;
  const SpaceFile sf = parse_space(generate(spec));
  Fixture fx{sf.space, build_cubes(sf.space, 0.5, 0), {}, {}, {}};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  const Eigen::Index N = static_cast<Eigen::Index>(fx.space.size());
  const Eigen::Index C = 6;
  fx.samples.resize(N, C);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index c = 0; c < C; ++c) fx.samples(i, c) = nd(rng);
  fx.g.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) fx.g(i) = nd(rng);
  auto [pos, inserted] = cache.emplace(n, std::move(fx));
  Fixture& f = pos->second;
  f.problem.samples = &f.samples;
  for (int k = std::min(f.cubes.k_min, 0); k <= f.cubes.k_max; ++k) {
    f.problem.ks.push_back(k);
    Eigen::VectorXd w(C);
    for (Eigen::Index c = 0; c < C; ++c) w(c) = c >= std::max(k, 0) ? 1.0 : 0.0;
    f.problem.weights.push_back(w);
  }
  f.problem.p = 1.5;
  f.problem.q = 2.0;
  f.problem.tau = 0.25;
  return f;
}

void BM_mixed_norm(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mixed_norm(f.problem, f.cubes, f.space.mu()));
}
void BM_mixed_norm_reference(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reference::mixed_norm(f.problem, f.cubes, f.space.mu()));
}
void BM_peetre_sup(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(f.g.size());
  for (auto _ : st) benchmark::DoNotOptimize(peetre_sup(f.space, f.g, w, 2.0, 3.0));
}
void BM_peetre_sup_reference(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(f.g.size());
  for (auto _ : st) benchmark::DoNotOptimize(reference::peetre_sup(f.space, f.g, w, 2.0, 3.0));
}
void BM_hl_maximal(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(hl_maximal_sup(f.space, f.g));
}
void BM_hl_maximal_reference(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reference::hl_maximal_sup(f.space, f.g));
}

}  // namespace

BENCHMARK(BM_mixed_norm)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_mixed_norm_reference)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_peetre_sup)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_peetre_sup_reference)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_hl_maximal)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_hl_maximal_reference)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
