#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gtbp/association.hpp"
#include "gtbp/filter.hpp"
#include "gtbp/sim.hpp"

using namespace gtbp;

namespace {

AssociationProblem random_problem(int n, int m) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  AssociationProblem p;
  p.beta.resize(n, m + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= m; ++j) p.beta(i, j) = u(gen);
  }
  p.xi.resize(m);
  for (int j = 0; j < m; ++j) p.xi(j) = u(gen);
  return p;
}

void BM_Associate(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto p = random_problem(n, n + 10);
  for (auto _ : state) benchmark::DoNotOptimize(bp_associate(p, {20, 1e-5, true}));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Associate)->RangeMultiplier(2)->Range(4, 64)->Complexity();

// One tracker step on the line formation after a short warm-up.
void BM_FilterStep(benchmark::State& state) {
  ScenarioSpec spec = build_scenario2(5, 50.0);
  const GroundTruth truth = generate_truth(spec);
  Rng sim(1);
  const auto frames = synthesize(truth, spec, sim);

  FilterConfig config;
  config.particles = static_cast<std::size_t>(state.range(0));
  config.max_partitions = static_cast<std::size_t>(state.range(1));
  config.prune_threshold = 1e-5 * spec.clutter_mean;
  config.bp_max_iterations = 20;
  config.bp_fixed_iterations = true;
  Tracker warm(config, 2);
  for (int k = 0; k < 10; ++k) warm.step(frames[static_cast<std::size_t>(k)]);

  for (auto _ : state) {
    state.PauseTiming();
    Tracker tracker = warm;
    state.ResumeTiming();
    benchmark::DoNotOptimize(tracker.step(frames[10]));
  }
}
BENCHMARK(BM_FilterStep)->Args({500, 1})->Args({500, 2})->Args({500, 4})->Args({1000, 2})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
