// Serial reference path against the OpenMP path for the hot kernels.
// Argument 0 selects Exec::serial, 1 selects Exec::parallel.

#include <benchmark/benchmark.h>

#include "jumpflow/densities.hpp"
#include "jumpflow/kernel_spde.hpp"
#include "jumpflow/kolmogorov.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/registry.hpp"
#include "jumpflow/spatial_ops.hpp"
#include "jumpflow/stochastic_calculus.hpp"

using namespace jumpflow;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

const JumpDiffusionModel& ou() {
  static const auto model = make_model({"ou_jump", {}, std::nullopt});
  return model;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel x" + std::to_string(thread_count()));
}

void BM_FokkerPlanckRhs2D(benchmark::State& state) {
  const auto model = make_rotation2d(1.0, 0.2);
  const auto grid = SpatialGrid::square(-3.0, 3.0, 257);
  Vec mean(2);
  mean << 1.0, 0.0;
  const auto p = gaussian_field(grid, mean, 0.2);
  const auto coeffs = sample_coefficients(model, grid, 0.0);
  std::vector<double> out(grid.size());
  for (auto _ : state) {
    fokker_planck_rhs(grid, coeffs, p, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

void BM_KernelEnsemble(benchmark::State& state) {
  const auto grid = SpatialGrid::line(-5.0, 5.0, 512);
  const auto rho0 = gaussian_field(grid, Vec::Constant(1, 0.5), 0.1);
  const auto tgrid = kernel_time_grid(ou(), grid, 0.0, 0.25);
  const auto seeds = seed_range(1, 16);
  for (auto _ : state) {
    auto e = kernel_ensemble(ou(), grid, rho0, tgrid, seeds, exec_of(state));
    benchmark::DoNotOptimize(e.mean.data());
  }
  label(state);
}

void BM_MonteCarloDensity(benchmark::State& state) {
  const InitialSampler init = [](std::mt19937_64&) { return Vec::Constant(1, 0.5); };
  const auto edges = uniform_edges(-3.0, 3.0, 64);
  for (auto _ : state) {
    auto h = monte_carlo_density(ou(), init, 20000, edges, 0.0, 0.5, 50, 7, exec_of(state));
    benchmark::DoNotOptimize(h.counts.data());
  }
  label(state);
}

}  // namespace

BENCHMARK(BM_FokkerPlanckRhs2D)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_KernelEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MonteCarloDensity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
