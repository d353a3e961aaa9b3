#include <benchmark/benchmark.h>

#include "lkl/assumptions.hpp"
#include "lkl/diagnostics.hpp"
#include "lkl/fokker_planck.hpp"
#include "lkl/sde.hpp"

namespace {

using namespace lkl;

std::shared_ptr<const GaussianPath> moving() {
  return make_gaussian_path({0.0}, {1.0}, 1.0, 0.5, Schedule(Interpolation::kLinear, 0.0, 1.0));
}

void BM_FpStep1d(benchmark::State& state) {
  const auto path = moving();
  const Grid grid = build_grid(*path, 0.0, 1.0, 8.0, static_cast<std::size_t>(state.range(0)));
  GridDensity q = discretize_gaussian(grid, std::vector<double>{-0.5}, 1.5, 0.0);
  const double dt = 0.5 * stability_limit(q, *path);
  for (auto _ : state) {
    q = fp_step(q, *path, dt);
    benchmark::DoNotOptimize(q.values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FpStep1d)->Arg(512)->Arg(2048)->Arg(8192);

void BM_FpStep2d(benchmark::State& state) {
  const auto path = make_gaussian_path({0.0, 0.0}, {1.0, -1.0}, 1.0, 0.5);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Grid grid = build_grid(*path, 0.0, 1.0, 8.0, n);
  GridDensity q = discretize_gaussian(grid, std::vector<double>{0.0, 0.0}, 1.0, 0.0);
  const double dt = 0.5 * stability_limit(q, *path);
  for (auto _ : state) {
    q = fp_step(q, *path, dt);
    benchmark::DoNotOptimize(q.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}
BENCHMARK(BM_FpStep2d)->Arg(128)->Arg(256);

void BM_EmStep(benchmark::State& state) {
  const auto path = moving();
  ParticleEnsemble e = sample_gaussian_ensemble(static_cast<std::size_t>(state.range(0)),
                                                std::vector<double>{-0.5}, 1.5, 1, 0.0);
  EmOptions opts;
  opts.workers = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    e = em_step(e, *path, 1e-3, opts);
    benchmark::DoNotOptimize(e.positions.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmStep)->Args({100000, 1})->Args({100000, 4});

void BM_ComputeRecord(benchmark::State& state) {
  const auto path = moving();
  const Grid grid = build_grid(*path, 0.0, 1.0, 8.0, static_cast<std::size_t>(state.range(0)));
  const GridDensity q = discretize_gaussian(grid, std::vector<double>{-0.5}, 1.5, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(compute_record(q, *path));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeRecord)->Arg(2048)->Arg(8192);

void BM_CheckAssumptions(benchmark::State& state) {
  const auto path = make_gaussian_path({0.0, 0.0}, {1.0, -1.0}, 1.0, 0.5);
  const std::vector<double> times{0.0, 0.5, 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        check_assumptions(*path, Box::symmetric(2, 4.0), times, {0.5, std::nullopt}));
  }
}
BENCHMARK(BM_CheckAssumptions)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
