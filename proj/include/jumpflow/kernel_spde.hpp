#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jumpflow/grid.hpp"
#include "jumpflow/jacobian.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/noise.hpp"
#include "jumpflow/path.hpp"
#include "jumpflow/report.hpp"
#include "jumpflow/spatial_ops.hpp"

namespace jumpflow {

struct KernelOptions {
  Exec exec = Exec::serial;
  bool store_history = true;  // false keeps only the first and last slices
  double mass_floor = 0.5;    // below this the run is declared unstable
};

// rho(t, x) under one noise realization.
struct KernelField {
  GridField field;
  std::vector<double> mass;              // trapezoid mass at every node
  std::vector<double> boundary_loss;     // cumulative mass lost through the box
  std::vector<double> jump_mass_change;  // cumulative mass change from pull-backs
  CflLimits cfl;
  std::uint64_t seed = 0;
  double max_pullback_det_error = 0.0;
};

// Explicit Euler in time on the noise nodes:
//   rho += [-d(rho a) + 1/2 dd(rho b b^T)] dt - d(rho b_k) dw_k,
// then at each jump rho <- rho(x^{-1}) * det(I + dg/dx)^{-1}.
// Throws CflError when a noise step exceeds the CFL bound and
// InstabilityError when the mass drops below options.mass_floor.
KernelField solve_kernel_spde(const JumpDiffusionModel& model, const SpatialGrid& grid,
                              const std::vector<double>& rho0, const NoiseRealization& noise,
                              const KernelOptions& options = {});

// Noise grid of uniform base steps satisfying fraction * CFL.
TimeGrid kernel_time_grid(const JumpDiffusionModel& model, const SpatialGrid& grid, double t0,
                          double T, double fraction = 0.9);

// max over nodes of |J(t) rho(t, x(t)) - rho(0, x0)|.
VerificationReport check_pathwise_invariant(const KernelField& kernel, const Trajectory& traj,
                                            const JacobianSeries& jac, int margin_cells = 2);

// Same over starting points x0 with rho(0, x0) > threshold, each path
// driven by the kernel's noise.
VerificationReport check_pathwise_invariant(const KernelField& kernel,
                                            const JumpDiffusionModel& model,
                                            const NoiseRealization& noise,
                                            const std::vector<Vec>& starts,
                                            double threshold = 1e-4, int margin_cells = 2);

struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> f;
};

std::vector<TestFunction> registry_test_functions();

// int f rho(T) by trapezoid against the Monte Carlo mean of f(x(T; y)),
// y ~ rho(0), under the same noise.
VerificationReport check_global_invariants(const KernelField& kernel,
                                           const JumpDiffusionModel& model,
                                           const NoiseRealization& noise,
                                           const std::vector<TestFunction>& tests,
                                           std::size_t samples, std::uint64_t seed,
                                           Exec exec = Exec::parallel);

// Mean and per-node sample standard deviation of kernels solved under
// independent seeds; serial solves inside, parallel over seeds.
struct KernelEnsemble {
  SpatialGrid grid;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::size_t members = 0;
  double max_mass_gap = 0.0;
};

KernelEnsemble kernel_ensemble(const JumpDiffusionModel& model, const SpatialGrid& grid,
                               const std::vector<double>& rho0, const TimeGrid& tgrid,
                               const std::vector<std::uint64_t>& seeds,
                               Exec exec = Exec::parallel);

}  // namespace jumpflow
