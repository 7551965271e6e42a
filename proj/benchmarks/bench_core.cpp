#include <benchmark/benchmark.h>

#include "stogeo/control.hpp"
#include "stogeo/ergodic.hpp"
#include "stogeo/integrator.hpp"

using namespace stogeo;

namespace {

const BundleState kStart{{0, 1, 0}, {1, 0, 0}};

void BM_ImplicitStep(benchmark::State& state) {
  StepConfig cfg;
  cfg.D = static_cast<double>(state.range(0));
  const NoiseStream noise(1, 0);
  StepState s = start_state(kStart, cfg);
  for (auto _ : state) {
    const StepResult r = implicit_step(s, noise.increment(static_cast<std::uint64_t>(s.n), cfg.k), cfg);
    s = advance(s, r);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ImplicitStep)->Arg(1)->Arg(100);

void BM_EulerMaruyamaStep(benchmark::State& state) {
  StepConfig cfg;
  const NoiseStream noise(1, 0);
  BundleState z = kStart;
  std::uint64_t n = 0;
  for (auto _ : state) {
    z = euler_maruyama_step(z, noise.increment(n++, cfg.k), cfg);
    benchmark::DoNotOptimize(z);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EulerMaruyamaStep);

void BM_PhiloxNormal(benchmark::State& state) {
  const NoiseStream noise(7, 3);
  std::uint64_t n = 0;
  for (auto _ : state) benchmark::DoNotOptimize(noise.standard_normal(n++));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxNormal);

void BM_JacobiBracket(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(jacobi_bracket(FieldId::f, FieldId::gf, kStart));
  }
}
BENCHMARK(BM_JacobiBracket);

// Path-steps per second for a short ensemble; argument = worker count.
void BM_EnsembleThroughput(benchmark::State& state) {
  EnsembleConfig cfg;
  cfg.N = 256;
  cfg.T = 1.0;
  cfg.snapshot_times = {1.0};
  cfg.workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_ensemble(cfg, kStart));
  state.SetItemsProcessed(state.iterations() * cfg.N * step_count(cfg.T, cfg.step.k));
}
BENCHMARK(BM_EnsembleThroughput)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_PlanControl(benchmark::State& state) {
  const BundleState target{{0.6, 0, 0.8}, {0, 1, 0}};
  const double T = minimum_horizon(1.0) + 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(plan_control({kStart, target, T}));
}
BENCHMARK(BM_PlanControl)->Unit(benchmark::kMicrosecond);

void BM_BundleCounts(benchmark::State& state) {
  const auto pts = sample_uniform_m1(20000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(bundle_counts(pts));
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_BundleCounts)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
