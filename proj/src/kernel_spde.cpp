#include "jumpflow/kernel_spde.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "jumpflow/densities.hpp"
#include "jumpflow/errors.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/stats.hpp"

namespace jumpflow {

namespace {

void validate_initial_density(const SpatialGrid& grid, const std::vector<double>& rho0) {
  if (rho0.size() != grid.size()) throw Error("initial density does not match the grid");
  for (double v : rho0) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("initial density must be finite and nonnegative");
  }
  const double mass = integrate(grid, rho0);
  if (std::abs(mass - 1.0) > 1e-10) {
    throw Error("initial density must have unit mass (got " + format_double(mass) + ")");
  }
}

}  // namespace

TimeGrid kernel_time_grid(const JumpDiffusionModel& model, const SpatialGrid& grid, double t0,
                          double T, double fraction) {
  const auto cfl = cfl_limits(model, grid, t0, T);
  return TimeGrid::uniform(t0, T, cfl_steps(cfl, t0, T, fraction));
}

KernelField solve_kernel_spde(const JumpDiffusionModel& model, const SpatialGrid& grid,
                              const std::vector<double>& rho0, const NoiseRealization& noise,
                              const KernelOptions& options) {
  validate_initial_density(grid, rho0);
  KernelField out;
  out.seed = noise.seed;
  out.cfl = cfl_limits(model, grid, noise.grid.t0, noise.grid.T);
  const double max_step = noise.grid.max_step();
  if (max_step > out.cfl.dt * (1.0 + 1e-9)) {
    throw CflError("time step " + format_double(max_step) + " violates the " + out.cfl.binding +
                       " CFL bound; need dt <= " + format_double(out.cfl.dt),
                   out.cfl.dt);
  }

  const std::size_t size = grid.size();
  CoefficientCache coeffs(model, grid, options.exec);
  JumpMapCache maps(model, grid);

  out.field.grid = grid;
  out.field.times.push_back(noise.grid.nodes.front());
  out.field.values.push_back(rho0);
  out.mass.push_back(integrate(grid, rho0));
  out.boundary_loss.push_back(0.0);
  out.jump_mass_change.push_back(0.0);

  std::vector<double> rho = rho0, drift(size), flux(size, 0.0), next(size), pulled(size);
  double loss = 0.0, jump_change = 0.0;
  for (std::size_t i = 0; i < noise.steps(); ++i) {
    const double t = noise.grid.nodes[i];
    const double dt = noise.dt(i);
    const auto& c = coeffs.at(t);
    fokker_planck_rhs(grid, c, rho, drift, options.exec);
    if (model.noise_dim > 0) stochastic_flux(grid, c, rho, noise.increment(i), flux, options.exec);
    double change = 0.0;
    for (std::size_t j = 0; j < size; ++j) {
      const double inc = dt * drift[j] + flux[j];
      next[j] = rho[j] + inc;
      change += inc;
    }
    loss -= change * grid.cell_volume();

    const auto jumps = noise.jumps_at(i + 1);
    const std::size_t node = i + 1;
    if (!jumps.empty()) {
      if (options.store_history) out.field.left_limits[out.field.values.size()] = next;
      for (const auto& e : jumps) {
        const auto& map = maps.pullback(e.atom, e.time);
        out.max_pullback_det_error = std::max(out.max_pullback_det_error, map.max_weight_error());
        const double before = cell_sum(grid, next);
        map.apply(next, pulled, options.exec);
        jump_change += cell_sum(grid, pulled) - before;
        std::swap(next, pulled);
      }
    }
    std::swap(rho, next);

    for (double v : rho) {
      if (!std::isfinite(v)) throw DivergenceError("kernel became non-finite", node);
    }
    const double mass = integrate(grid, rho);
    if (mass < options.mass_floor) {
      throw InstabilityError("kernel mass collapsed to " + format_double(mass) + " at t=" +
                             format_double(noise.grid.nodes[node]));
    }
    if (options.store_history || node == noise.steps()) {
      out.field.times.push_back(noise.grid.nodes[node]);
      out.field.values.push_back(rho);
      out.mass.push_back(mass);
      out.boundary_loss.push_back(loss);
      out.jump_mass_change.push_back(jump_change);
    }
  }
  return out;
}

VerificationReport check_pathwise_invariant(const KernelField& kernel, const Trajectory& traj,
                                            const JacobianSeries& jac, int margin_cells) {
  if (kernel.field.size() != traj.size() || jac.values.size() != traj.size()) {
    throw Error("kernel history, trajectory and Jacobian must share one time grid");
  }
  const SpatialGrid& grid = kernel.field.grid;
  VerificationReport report;
  report.title = "pathwise-invariant";
  const double rho_start = interpolate(grid, kernel.field.at(0), traj.states[0]);
  double worst = 0.0;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    bool inside = true;
    for (int d = 0; d < grid.dim(); ++d) {
      const auto& ax = grid.axis(d);
      const double pad = margin_cells * ax.spacing();
      if (!(traj.states[i][d] >= ax.lo + pad && traj.states[i][d] <= ax.hi - pad)) inside = false;
    }
    if (!inside) {
      ++excluded;
      continue;
    }
    const double rho = interpolate(grid, kernel.field.at(i), traj.states[i]);
    worst = std::max(worst, std::abs(jac.values[i] * rho - rho_start));
  }
  report.add_metric("rho0_at_start", rho_start);
  report.add_metric("max_residual", worst);
  report.add_metric("nodes_excluded", static_cast<double>(excluded));
  if (excluded > 0) report.warn(std::to_string(excluded) + " nodes left the domain interior");
  return report;
}

VerificationReport check_pathwise_invariant(const KernelField& kernel,
                                            const JumpDiffusionModel& model,
                                            const NoiseRealization& noise,
                                            const std::vector<Vec>& starts, double threshold,
                                            int margin_cells) {
  VerificationReport report;
  report.title = "pathwise-invariant";
  report.set_config("seed", static_cast<double>(noise.seed));
  report.set_config("threshold", threshold);
  report.set_config("starts", static_cast<double>(starts.size()));
  double worst = 0.0, relative = 0.0;
  std::size_t used = 0, excluded = 0;
  for (const auto& x0 : starts) {
    const double rho_start = interpolate(kernel.field.grid, kernel.field.at(0), x0);
    if (!(rho_start > threshold)) continue;
    const Trajectory traj = simulate_path(model, x0, noise);
    const JacobianPair jac = evolve_jacobian(model, traj, noise);
    const auto one = check_pathwise_invariant(kernel, traj, jac.integrated, margin_cells);
    worst = std::max(worst, one.metric("max_residual"));
    relative = std::max(relative, one.metric("max_residual") / rho_start);
    excluded += static_cast<std::size_t>(one.metric("nodes_excluded"));
    ++used;
  }
  report.add_metric("max_residual", worst);
  report.add_metric("max_relative_residual", relative);
  report.add_metric("starts_used", static_cast<double>(used));
  report.add_metric("nodes_excluded", static_cast<double>(excluded));
  if (excluded > 0) report.warn(std::to_string(excluded) + " path nodes left the domain interior");
  return report;
}

std::vector<TestFunction> registry_test_functions() {
  return {
      {"one", [](const Vec&) { return 1.0; }},
      {"x", [](const Vec& x) { return x[0]; }},
      {"x2", [](const Vec& x) { return x[0] * x[0]; }},
      {"cos", [](const Vec& x) { return std::cos(x[0]); }},
  };
}

VerificationReport check_global_invariants(const KernelField& kernel,
                                           const JumpDiffusionModel& model,
                                           const NoiseRealization& noise,
                                           const std::vector<TestFunction>& tests,
                                           std::size_t samples, std::uint64_t seed, Exec exec) {
  const SpatialGrid& grid = kernel.field.grid;
  VerificationReport report;
  report.title = "global-invariants";
  report.set_config("model", model.name);
  report.set_config("noise_seed", static_cast<double>(noise.seed));
  report.set_config("mc_seed", static_cast<double>(seed));
  report.set_config("samples", static_cast<double>(samples));

  const DensitySampler sampler(grid, kernel.field.at(0));
  auto finals = ensemble_map(samples, [&](std::size_t s) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    std::mt19937_64 rng(seq);
    return simulate_terminal(model, sampler.sample(rng), noise);
  }, exec);

  for (const auto& test : tests) {
    const double lhs = integrate(grid, kernel.field.final(), test.f);
    std::vector<double> values(samples);
    for (std::size_t s = 0; s < samples; ++s) values[s] = test.f(finals[s]);
    const double rhs = mean(values);
    report.add_metric("lhs_" + test.name, lhs);
    report.add_metric("rhs_" + test.name, rhs);
    report.add_metric("gap_" + test.name, std::abs(lhs - rhs));
    report.add_metric("se_" + test.name, standard_error(values));
  }
  const double mass = integrate(grid, kernel.field.final());
  const double loss = kernel.boundary_loss.back();
  report.add_metric("mass_gap", std::abs(mass - 1.0));
  report.add_metric("boundary_loss", loss);
  report.add_metric("jump_mass_change", kernel.jump_mass_change.back());
  if (std::abs(loss) > 1e-3) report.warn("boundary loss " + format_double(loss) + " exceeds 1e-3");
  return report;
}

KernelEnsemble kernel_ensemble(const JumpDiffusionModel& model, const SpatialGrid& grid,
                               const std::vector<double>& rho0, const TimeGrid& tgrid,
                               const std::vector<std::uint64_t>& seeds, Exec exec) {
  KernelOptions options;
  options.store_history = false;
  auto finals = ensemble_map(seeds.size(), [&](std::size_t s) {
    const auto noise = sample_noise(model, tgrid, seeds[s]);
    return solve_kernel_spde(model, grid, rho0, noise, options).field.final();
  }, exec);
  KernelEnsemble out;
  out.grid = grid;
  out.members = seeds.size();
  out.mean.assign(grid.size(), 0.0);
  out.stddev.assign(grid.size(), 0.0);
  for (const auto& f : finals) {
    for (std::size_t j = 0; j < f.size(); ++j) out.mean[j] += f[j];
    out.max_mass_gap = std::max(out.max_mass_gap, std::abs(integrate(grid, f) - 1.0));
  }
  const double M = static_cast<double>(seeds.size());
  for (double& v : out.mean) v /= M;
  if (seeds.size() > 1) {
    for (const auto& f : finals) {
      for (std::size_t j = 0; j < f.size(); ++j) out.stddev[j] += (f[j] - out.mean[j]) * (f[j] - out.mean[j]);
    }
    for (double& v : out.stddev) v = std::sqrt(v / (M - 1.0));
  }
  return out;
}

}  // namespace jumpflow
