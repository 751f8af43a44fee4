#include <benchmark/benchmark.h>

#include "sns/experiments.hpp"

using namespace sns;

namespace {

SchemeConfig bench_config(int n) {
  SchemeConfig cfg;
  cfg.n_interior = n;
  cfg.dt = 1e-4;
  cfg.t_final = 0.5;
  cfg.lambda = -1;
  cfg.covariance = SpectralCovariance::power_decay(16, 12.0);
  cfg.seed = 1;
  return cfg;
}

void BM_SampleIncrement(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto grid = UniformGrid::create(n);
  const SchemeConfig cfg = bench_config(n);
  const NoiseSampler sampler(cfg.covariance, grid);
  std::uint64_t step = 0;
  for (auto _ : state) {
    GaussianStream stream = fork_stream(1, 0, step++);
    benchmark::DoNotOptimize(sampler.sample(cfg.dt, stream));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SampleIncrement)->Arg(63)->Arg(511);

void BM_MidpointStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto grid = UniformGrid::create(n);
  const SchemeConfig cfg = bench_config(n);
  const NoiseSampler sampler(cfg.covariance, grid);
  MidpointStepper stepper(grid, cfg);
  GridFunction u = sine_profile(1, 1.0).sample_on(grid);
  std::uint64_t step = 0;
  for (auto _ : state) {
    GaussianStream stream = fork_stream(1, 0, step);
    const NoiseIncrement dw = sampler.sample(cfg.dt, stream, 1.0);
    stepper.advance(u, dw, static_cast<double>(step) * cfg.dt,
                    static_cast<std::int64_t>(step));
    ++step;
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_MidpointStep)->Arg(63)->Arg(511);

void BM_FunctionalReport(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridFunction u = sine_profile(1, 1.0).sample_on(UniformGrid::create(n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(FunctionalReport::compute(u, -1, 0.0));
  }
}
BENCHMARK(BM_FunctionalReport)->Arg(63)->Arg(511);

void BM_StateStats(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridFunction u = sine_profile(1, 1.0).sample_on(UniformGrid::create(n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(state_stats(u));
  }
}
BENCHMARK(BM_StateStats)->Arg(63)->Arg(511);

void BM_TruncationResidual(benchmark::State& state) {
  const auto grid = UniformGrid::create(static_cast<int>(state.range(0)));
  const Profile profile = sine_profile(1, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(truncation_residual(profile, grid));
  }
}
BENCHMARK(BM_TruncationResidual)->Arg(127);

}  // namespace

BENCHMARK_MAIN();
