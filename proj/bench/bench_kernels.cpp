// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "mcs/area_min.hpp"
#include "mcs/graph_operator.hpp"
#include "mcs/radial_metric.hpp"

using namespace mcs;

namespace {

template <bool Parallel>
void BM_BarrierCheck(benchmark::State& state) {
  const auto metric = cone_conformal(0.8, 8);
  const BarrierSpec spec = make_barrier_spec(7, 0.8);
  const BarrierGrid grid = default_barrier_grid();
  for (auto _ : state) {
    const BarrierReport r = Parallel ? barrier_check(*metric, spec, grid)
                                     : barrier_check_serial(*metric, spec, grid);
    benchmark::DoNotOptimize(r.min_relative);
  }
  state.SetItemsProcessed(state.iterations() * grid.theta.size() * grid.r.size());
}

template <bool Parallel>
void BM_CurvatureSweep(benchmark::State& state) {
  const auto cap = capped_cone_profile(0.7, 8);
  std::vector<double> radii;
  for (int i = 0; i < state.range(0); ++i)
    radii.push_back(1e-3 * std::pow(1e6, i / (state.range(0) - 1.0)));
  for (auto _ : state) {
    const auto r = Parallel ? curvature_sweep(*cap, radii) : curvature_sweep_serial(*cap, radii);
    benchmark::DoNotOptimize(r.back().K_radial);
  }
  state.SetItemsProcessed(state.iterations() * radii.size());
}

template <bool Parallel>
void BM_ThresholdScan(benchmark::State& state) {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.75 + 0.025 * i);
  grid.back() = 1.0;
  ScanOptions opts;
  opts.grid_size = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const ScanReport r = Parallel ? threshold_scan(4, grid, opts) : threshold_scan_serial(4, grid, opts);
    benchmark::DoNotOptimize(r.kappa_hat);
  }
  state.SetItemsProcessed(state.iterations() * grid.size());
}

}  // namespace

BENCHMARK(BM_BarrierCheck<false>)->Name("barrier_check/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BarrierCheck<true>)->Name("barrier_check/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CurvatureSweep<false>)->Name("curvature_sweep/serial")->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CurvatureSweep<true>)->Name("curvature_sweep/openmp")->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdScan<false>)->Name("threshold_scan/serial")->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdScan<true>)->Name("threshold_scan/openmp")->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
