#include "jumpflow/kolmogorov.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "jumpflow/errors.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/path.hpp"

namespace jumpflow {

JumpDiffusionModel compensate_drift(const JumpDiffusionModel& model) {
  if (!model.has_jumps()) return model;
  JumpDiffusionModel out = model;
  out.name = model.name + "+compensated";
  const JumpDiffusionModel base = model;
  out.drift = [base](double t, const Vec& x) -> Vec {
    Vec a = base.drift(t, x);
    for (const auto& atom : base.marks.atoms) a -= atom.rate * base.jump(t, x, atom.mark);
    return a;
  };
  out.drift_jacobian = [base](double t, const Vec& x) -> Mat {
    Mat jac = drift_jacobian(base, t, x);
    for (const auto& atom : base.marks.atoms) jac -= atom.rate * jump_jacobian(base, t, x, atom.mark);
    return jac;
  };
  return out;
}

const char* to_string(JumpForm form) { return form == JumpForm::poisson ? "poisson" : "centered"; }
const char* to_string(TimeScheme scheme) { return scheme == TimeScheme::heun ? "heun" : "euler"; }

int auto_steps(const JumpDiffusionModel& model, const SpatialGrid& grid, double t0, double T,
               double fraction) {
  return cfl_steps(cfl_limits(model, grid, t0, T), t0, T, fraction);
}

namespace {

int resolve_steps(const CflLimits& cfl, const SolverOptions& options, double t0, double T) {
  if (T <= t0) return 0;
  if (options.steps <= 0) return cfl_steps(cfl, t0, T, options.cfl_fraction);
  const double dt = (T - t0) / options.steps;
  if (dt > cfl.dt * (1.0 + 1e-9)) {
    throw CflError("time step " + format_double(dt) + " violates the " + cfl.binding +
                       " CFL bound; need dt <= " + format_double(cfl.dt),
                   cfl.dt);
  }
  return options.steps;
}

// Right-hand side of the forward equation, split into its spatial
// (mass-conserving up to the boundary) and jump parts.
class ForwardOperator {
 public:
  ForwardOperator(const JumpDiffusionModel& model, const SpatialGrid& grid, const SolverOptions& o)
      : model_(model), grid_(grid), options_(o), coeffs_(model, grid, o.exec), maps_(model, grid),
        tmp_(grid.size()) {}

  void operator()(double t, std::span<const double> p, std::span<double> spatial,
                  std::span<double> jump) {
    fokker_planck_rhs(grid_, coeffs_.at(t), p, spatial, options_.exec);
    std::fill(jump.begin(), jump.end(), 0.0);
    for (std::size_t a = 0; a < model_.marks.atoms.size(); ++a) {
      const double rate = model_.marks.atoms[a].rate;
      maps_.pullback(a, t).apply(p, tmp_, options_.exec);
      for (std::size_t j = 0; j < p.size(); ++j) jump[j] += rate * (tmp_[j] - p[j]);
      if (options_.jump_form == JumpForm::centered) {
        jump_divergence(grid_, model_, t, model_.marks.atoms[a].mark, p, tmp_, options_.exec);
        for (std::size_t j = 0; j < p.size(); ++j) jump[j] += rate * tmp_[j];
      }
    }
  }

 private:
  const JumpDiffusionModel& model_;
  const SpatialGrid& grid_;
  SolverOptions options_;
  CoefficientCache coeffs_;
  JumpMapCache maps_;
  std::vector<double> tmp_;
};

class BackwardOperator {
 public:
  BackwardOperator(const JumpDiffusionModel& model, const SpatialGrid& grid, const SolverOptions& o)
      : model_(model), options_(o), grid_(grid), coeffs_(model, grid, o.exec), maps_(model, grid),
        tmp_(grid.size()) {}

  void operator()(double s, std::span<const double> v, std::span<double> out) {
    generator(grid_, coeffs_.at(s), v, out, options_.exec);
    for (std::size_t a = 0; a < model_.marks.atoms.size(); ++a) {
      const double rate = model_.marks.atoms[a].rate;
      maps_.shift(a, s).apply(v, tmp_, options_.exec);
      for (std::size_t j = 0; j < v.size(); ++j) out[j] += rate * (tmp_[j] - v[j]);
    }
  }

 private:
  const JumpDiffusionModel& model_;
  SolverOptions options_;
  const SpatialGrid& grid_;
  CoefficientCache coeffs_;
  JumpMapCache maps_;
  std::vector<double> tmp_;
};

}  // namespace

DensityField solve_forward(const JumpDiffusionModel& model, const SpatialGrid& grid,
                           const std::vector<double>& p0, double t0, double T,
                           const SolverOptions& options) {
  if (p0.size() != grid.size()) throw Error("initial density does not match the grid");
  DensityField out;
  out.cfl = cfl_limits(model, grid, t0, T);
  out.steps = resolve_steps(out.cfl, options, t0, T);
  out.dt = out.steps > 0 ? (T - t0) / out.steps : 0.0;
  out.field.grid = grid;
  out.field.times.push_back(t0);
  out.field.values.push_back(p0);
  out.mass.push_back(integrate(grid, p0));
  out.boundary_loss.push_back(0.0);
  out.jump_mass_change.push_back(0.0);

  ForwardOperator op(model, grid, options);
  const std::size_t size = grid.size();
  std::vector<double> p = p0, s1(size), j1(size), s2(size), j2(size), stage(size);
  const double dt = out.dt;
  const double cell = grid.cell_volume();
  double loss = 0.0, jump_change = 0.0;
  for (int k = 0; k < out.steps; ++k) {
    const double t = t0 + k * dt;
    op(t, p, s1, j1);
    double ds = 0.0, dj = 0.0;
    if (options.scheme == TimeScheme::euler) {
      for (std::size_t j = 0; j < size; ++j) {
        ds += dt * s1[j];
        dj += dt * j1[j];
        p[j] += dt * (s1[j] + j1[j]);
      }
    } else {
      for (std::size_t j = 0; j < size; ++j) stage[j] = p[j] + dt * (s1[j] + j1[j]);
      op(t + dt, stage, s2, j2);
      for (std::size_t j = 0; j < size; ++j) {
        const double sp = 0.5 * dt * (s1[j] + s2[j]);
        const double jp = 0.5 * dt * (j1[j] + j2[j]);
        ds += sp;
        dj += jp;
        p[j] += sp + jp;
      }
    }
    loss -= ds * cell;
    jump_change += dj * cell;
    for (double v : p) {
      if (!std::isfinite(v)) throw DivergenceError("forward density became non-finite", static_cast<std::size_t>(k + 1));
    }
    const double mass = integrate(grid, p);
    if (mass < options.mass_floor) {
      throw InstabilityError("forward mass collapsed to " + format_double(mass));
    }
    if (options.store_history || k + 1 == out.steps) {
      out.field.times.push_back(k + 1 == out.steps ? T : t0 + (k + 1) * dt);
      out.field.values.push_back(p);
      out.mass.push_back(mass);
      out.boundary_loss.push_back(loss);
      out.jump_mass_change.push_back(jump_change);
    }
  }
  return out;
}

BackwardField solve_backward(const JumpDiffusionModel& model, const SpatialGrid& grid,
                             const std::vector<double>& phi, double s_start, double t_end,
                             const SolverOptions& options) {
  if (phi.size() != grid.size()) throw Error("terminal data does not match the grid");
  if (s_start > t_end) throw Error("backward solve needs s_start <= t_end");
  BackwardField out;
  out.cfl = cfl_limits(model, grid, s_start, t_end);
  out.steps = resolve_steps(out.cfl, options, s_start, t_end);
  out.dt = out.steps > 0 ? (t_end - s_start) / out.steps : 0.0;
  out.field.grid = grid;

  BackwardOperator op(model, grid, options);
  const std::size_t size = grid.size();
  std::vector<std::vector<double>> slices;
  std::vector<double> times;
  std::vector<double> v = phi, k1(size), k2(size), stage(size);
  slices.push_back(v);
  times.push_back(t_end);
  const double ds = out.dt;
  for (int k = 0; k < out.steps; ++k) {
    const double s = t_end - k * ds;
    op(s, v, k1);
    if (options.scheme == TimeScheme::euler) {
      for (std::size_t j = 0; j < size; ++j) v[j] += ds * k1[j];
    } else {
      for (std::size_t j = 0; j < size; ++j) stage[j] = v[j] + ds * k1[j];
      op(s - ds, stage, k2);
      for (std::size_t j = 0; j < size; ++j) v[j] += 0.5 * ds * (k1[j] + k2[j]);
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw DivergenceError("backward field became non-finite", static_cast<std::size_t>(k + 1));
    }
    if (options.store_history || k + 1 == out.steps) {
      slices.push_back(v);
      times.push_back(k + 1 == out.steps ? s_start : t_end - (k + 1) * ds);
    }
  }
  std::reverse(slices.begin(), slices.end());
  std::reverse(times.begin(), times.end());
  out.field.values = std::move(slices);
  out.field.times = std::move(times);
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> bin_blocks(const SpatialGrid& grid, int bin_cells) {
  if (bin_cells < 1) throw Error("bins need at least one cell");
  const int n0 = grid.axis(0).points;
  const int b0 = (n0 + bin_cells - 1) / bin_cells;
  const int n1 = grid.dim() == 2 ? grid.axis(1).points : 1;
  const int b1 = grid.dim() == 2 ? (n1 + bin_cells - 1) / bin_cells : 1;
  std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(b0 * b1));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const int i0 = grid.index(j, 0) / bin_cells;
    const int i1 = grid.dim() == 2 ? grid.index(j, 1) / bin_cells : 0;
    bins[static_cast<std::size_t>(i0 + b0 * i1)].push_back(j);
  }
  return bins;
}

}  // namespace

VerificationReport chapman_consistency(const JumpDiffusionModel& model, const SpatialGrid& grid,
                                       const std::vector<double>& p0, double t0, double s,
                                       double T, int bin_cells, const SolverOptions& options) {
  if (!(t0 <= s && s <= T)) throw Error("chapman_consistency needs t0 <= s <= T");
  SolverOptions leg = options;
  leg.store_history = false;
  leg.steps = 0;
  const auto p_s = solve_forward(model, grid, p0, t0, s, leg).field.final();
  const auto forward_T = solve_forward(model, grid, p_s, s, T, leg);
  const auto& p_T = forward_T.field.final();
  const auto weights = trapezoid_weights(grid);
  const auto bins = bin_blocks(grid, bin_cells);

  SolverOptions inner = leg;
  inner.exec = Exec::serial;
  auto mixed = ensemble_map(bins.size(), [&](std::size_t b) {
    std::vector<double> phi(grid.size(), 0.0);
    for (auto j : bins[b]) phi[j] = 1.0;
    const auto v = solve_backward(model, grid, phi, s, T, inner).field.at(0);
    double acc = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) acc += weights[j] * v[j] * p_s[j];
    return acc;
  }, options.exec);

  double gap = 0.0, mass_direct = 0.0, mass_mixed = 0.0;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    double direct = 0.0;
    for (auto j : bins[b]) direct += weights[j] * p_T[j];
    gap += std::abs(direct - mixed[b]);
    mass_direct += direct;
    mass_mixed += mixed[b];
  }
  VerificationReport report;
  report.title = "chapman-consistency";
  report.set_config("model", model.name);
  report.set_config("t0", t0);
  report.set_config("s", s);
  report.set_config("T", T);
  report.set_config("bin_cells", static_cast<double>(bin_cells));
  report.set_config("bins", static_cast<double>(bins.size()));
  report.set_config("scheme", to_string(options.scheme));
  report.add_metric("l1_gap", gap);
  report.add_metric("mass_direct", mass_direct);
  report.add_metric("mass_mixed", mass_mixed);
  return report;
}

VerificationReport duality(const JumpDiffusionModel& model, const SpatialGrid& grid,
                           const std::vector<double>& p0, const std::vector<double>& phi,
                           double t0, double T, const SolverOptions& options) {
  SolverOptions shared = options;
  shared.store_history = true;
  if (shared.steps <= 0) shared.steps = auto_steps(model, grid, t0, T, options.cfl_fraction);
  const auto forward = solve_forward(model, grid, p0, t0, T, shared);
  const auto backward = solve_backward(model, grid, phi, t0, T, shared);
  const auto weights = trapezoid_weights(grid);
  std::vector<double> pairing(forward.field.size());
  for (std::size_t k = 0; k < pairing.size(); ++k) {
    const auto& p = forward.field.at(k);
    const auto& v = backward.field.at(k);
    double acc = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) acc += weights[j] * v[j] * p[j];
    pairing[k] = acc;
  }
  double deviation = 0.0;
  for (double x : pairing) deviation = std::max(deviation, std::abs(x - pairing.front()));
  VerificationReport report;
  report.title = "duality";
  report.set_config("model", model.name);
  report.set_config("t0", t0);
  report.set_config("T", T);
  report.set_config("steps", static_cast<double>(shared.steps));
  report.set_config("scheme", to_string(options.scheme));
  report.add_metric("pairing_start", pairing.front());
  report.add_metric("pairing_mid", pairing[pairing.size() / 2]);
  report.add_metric("pairing_end", pairing.back());
  report.add_metric("max_deviation", deviation);
  report.add_metric("boundary_loss", forward.boundary_loss.back());
  return report;
}

std::vector<double> uniform_edges(double lo, double hi, int bins) {
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) edges[b] = lo + (hi - lo) * b / bins;
  return edges;
}

Histogram monte_carlo_density(const JumpDiffusionModel& model, const InitialSampler& init,
                              std::size_t paths, const std::vector<double>& edges, double t0,
                              double T, int steps, std::uint64_t seed, Exec exec) {
  if (edges.size() < 2) throw Error("histogram needs at least one bin");
  if (paths < 1000) throw Error("Monte Carlo density needs at least 1000 paths");
  const TimeGrid tgrid = TimeGrid::uniform(t0, T, steps);
  auto finals = ensemble_map(paths, [&](std::size_t i) -> std::optional<double> {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32), 7u};
    std::mt19937_64 rng(seq);
    const Vec x0 = init(rng);
    const std::uint64_t path_seed = seed ^ (0x9E3779B97F4A7C15ULL * (i + 1));
    try {
      return simulate_terminal(model, x0, sample_noise(model, tgrid, path_seed))[0];
    } catch (const DivergenceError&) {
      return std::nullopt;
    }
  }, exec);

  Histogram h;
  h.edges = edges;
  const std::size_t bins = edges.size() - 1;
  h.counts.assign(bins, 0);
  for (const auto& x : finals) {
    if (!x) {
      ++h.diverged;
      continue;
    }
    ++h.paths;
    if (!(*x >= edges.front() && *x < edges.back())) {
      ++h.outside;
      continue;
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), *x);
    ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
  }
  if (h.diverged * 100 > paths) {
    h.warnings.push_back(std::to_string(h.diverged) + " of " + std::to_string(paths) +
                         " paths diverged; the histogram is unreliable");
  }
  h.density.assign(bins, 0.0);
  h.stderr_density.assign(bins, 0.0);
  const double n = static_cast<double>(std::max<std::size_t>(h.paths, 1));
  for (std::size_t b = 0; b < bins; ++b) {
    const double frac = h.counts[b] / n;
    h.density[b] = frac / h.width(b);
    h.stderr_density[b] = std::sqrt(frac * (1.0 - frac) / n) / h.width(b);
  }
  return h;
}

std::vector<double> bin_masses(const SpatialGrid& grid, const std::vector<double>& p,
                               const std::vector<double>& edges) {
  if (grid.dim() != 1) throw Error("bin_masses is one-dimensional");
  const auto& axis = grid.axis(0);
  const double h = axis.spacing();
  std::vector<double> cumulative(grid.size(), 0.0);
  for (std::size_t j = 1; j < grid.size(); ++j) cumulative[j] = cumulative[j - 1] + 0.5 * h * (p[j - 1] + p[j]);
  auto F = [&](double x) {
    x = std::clamp(x, axis.lo, axis.hi);
    const double pos = (x - axis.lo) / h;
    const auto j = static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor(pos)), 0, axis.points - 2));
    const double s = pos - static_cast<double>(j);
    return cumulative[j] + h * (p[j] * s + 0.5 * (p[j + 1] - p[j]) * s * s);
  };
  std::vector<double> out(edges.size() - 1);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) out[b] = F(edges[b + 1]) - F(edges[b]);
  return out;
}

double histogram_l1(const Histogram& h, const SpatialGrid& grid, const std::vector<double>& p) {
  const auto masses = bin_masses(grid, p, h.edges);
  const double n = static_cast<double>(std::max<std::size_t>(h.paths, 1));
  double l1 = 0.0, inside = 0.0;
  for (std::size_t b = 0; b < masses.size(); ++b) {
    l1 += std::abs(masses[b] - h.counts[b] / n);
    inside += masses[b];
  }
  const double pde_outside = std::max(0.0, integrate(grid, p) - inside);
  return l1 + std::abs(pde_outside - h.outside / n);
}

VerificationReport expectation_link(const JumpDiffusionModel& model, const SpatialGrid& grid,
                                    const std::vector<double>& p0, double t0, double T,
                                    const std::vector<std::uint64_t>& seeds, Exec exec) {
  const TimeGrid tgrid = kernel_time_grid(model, grid, t0, T);
  const auto ensemble = kernel_ensemble(model, grid, p0, tgrid, seeds, exec);
  SolverOptions options;
  options.store_history = false;
  options.exec = exec;
  const auto forward = solve_forward(model, grid, p0, t0, T, options);
  const double l1 = l1_distance(grid, ensemble.mean, forward.field.final());
  const double band = 3.0 * integrate(grid, ensemble.stddev) / std::sqrt(static_cast<double>(seeds.size()));
  VerificationReport report;
  report.title = "expectation-link";
  report.set_config("model", model.name);
  report.set_config("members", static_cast<double>(seeds.size()));
  report.set_config("kernel_steps", static_cast<double>(tgrid.base_steps));
  report.set_config("forward_steps", static_cast<double>(forward.steps));
  report.set_config("T", T);
  report.add_metric("l1_mean_vs_forward", l1);
  report.add_metric("ensemble_band", band);
  report.add_metric("max_member_mass_gap", ensemble.max_mass_gap);
  report.check_le("mean kernel within ensemble band", l1, band);
  return report;
}

}  // namespace jumpflow
