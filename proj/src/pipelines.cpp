#include "jumpflow/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>

#include "jumpflow/densities.hpp"
#include "jumpflow/errors.hpp"
#include "jumpflow/jacobian.hpp"
#include "jumpflow/kernel_spde.hpp"
#include "jumpflow/kolmogorov.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/path.hpp"
#include "jumpflow/stats.hpp"
#include "jumpflow/stochastic_calculus.hpp"

namespace jumpflow {

namespace fs = std::filesystem;

bool PipelineOutput::passed() const { return failed_report() == nullptr; }

const VerificationReport* PipelineOutput::failed_report() const {
  for (const auto& r : reports) {
    if (!r.passed()) return &r;
  }
  return nullptr;
}

std::vector<std::string> PipelineOutput::warnings() const {
  std::vector<std::string> out;
  for (const auto& r : reports) {
    for (const auto& w : r.warnings) out.push_back(r.title + ": " + w);
  }
  return out;
}

std::vector<std::string> pipeline_names() {
  return {"simulate", "verify-integral", "verify-iw", "kernel",
          "forward",  "backward",        "duality",   "compare-mc"};
}

std::vector<std::size_t> snapshot_slices(const std::vector<double>& stored,
                                         const std::vector<double>& times) {
  if (stored.empty()) return {};
  if (times.empty()) {
    if (stored.size() == 1) return {0};
    return {0, stored.size() - 1};
  }
  std::vector<std::size_t> out;
  for (double t : times) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < stored.size(); ++i) {
      if (std::abs(stored[i] - t) < std::abs(stored[best] - t)) best = i;
    }
    if (std::find(out.begin(), out.end(), best) == out.end()) out.push_back(best);
  }
  return out;
}

void write_snapshots(const fs::path& path, const GridField& field,
                     const std::vector<std::size_t>& slices) {
  std::ofstream os(path);
  const auto& grid = field.grid;
  if (grid.dim() == 1) {
    os << "x";
  } else {
    for (int d = 0; d < grid.dim(); ++d) os << (d ? "," : "") << "x_" << d + 1;
  }
  for (auto i : slices) os << ",t=" << format_double(field.times[i]);
  os << '\n';
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Vec x = grid.point(j);
    for (int d = 0; d < grid.dim(); ++d) os << (d ? "," : "") << format_double(x[d]);
    for (auto i : slices) os << ',' << format_double(field.values[i][j]);
    os << '\n';
  }
}

namespace {

struct Context {
  const Scenario& s;
  JumpDiffusionModel model;
  fs::path out;
  Exec exec;
  PipelineOutput result;

  VerificationReport report(const std::string& title) const {
    VerificationReport r;
    r.title = title;
    return r;
  }
  fs::path file(const std::string& name) {
    result.files.push_back(out / name);
    return out / name;
  }
  std::vector<std::uint64_t> seeds() const {
    return seed_range(s.seed, static_cast<std::size_t>(s.seed_count));
  }
  int path_steps(int fallback) const { return s.steps > 0 ? s.steps : fallback; }
  std::vector<double> initial_density(const SpatialGrid& grid) const {
    const Vec mean = Eigen::Map<const Vec>(s.initial.mean.data(),
                                           static_cast<Eigen::Index>(s.initial.mean.size()));
    return s.initial.kind == "delta" ? mollified_delta(grid, mean)
                                     : gaussian_field(grid, mean, s.initial.variance);
  }
  SolverOptions solver() const {
    SolverOptions o;
    o.steps = s.steps;
    o.exec = exec;
    return o;
  }
};

void describe_scheme(VerificationReport& r, const Context& c, const SpatialGrid& grid) {
  for (int d = 0; d < grid.dim(); ++d) {
    const std::string axis = "grid.axis" + std::to_string(d);
    r.set_config(axis + ".lo", grid.axis(d).lo);
    r.set_config(axis + ".hi", grid.axis(d).hi);
    r.set_config(axis + ".points", static_cast<double>(grid.axis(d).points));
  }
  const auto cfl = cfl_limits(c.model, grid, c.s.t0, c.s.T);
  r.set_config("cfl.diffusion_dt", cfl.diffusion);
  r.set_config("cfl.advection_dt", cfl.advection);
  r.set_config("cfl.jump_dt", cfl.jumps);
  r.set_config("cfl.binding", cfl.binding);
  r.set_config("initial.kind", c.s.initial.kind);
  if (c.s.initial.kind == "delta") r.set_config("initial.mollifier_variance", mollifier_variance(grid));
}

void require_1d(const Context& c, const std::string& pipeline) {
  if (c.model.dim != 1) {
    throw ScenarioError("model.key", 0, pipeline + " supports one-dimensional models only");
  }
}

std::function<double(const Vec&)> terminal_function(const std::string& name) {
  if (name == "one") return [](const Vec&) { return 1.0; };
  if (name == "x") return [](const Vec& y) { return y[0]; };
  return [](const Vec& y) { return std::cos(y[0]); };
}

void simulate(Context& c) {
  const auto tgrid = TimeGrid::uniform(c.s.t0, c.s.T, c.path_steps(1000));
  const auto seeds = c.seeds();
  struct Run {
    Trajectory traj;
    JacobianPair jac;
    std::size_t jumps = 0;
  };
  const auto runs = ensemble_map(
      seeds.size(),
      [&](std::size_t i) {
        const auto noise = sample_noise(c.model, tgrid, seeds[i]);
        Run r;
        r.traj = simulate_path(c.model, c.s.start(), noise);
        r.jac = evolve_jacobian(c.model, r.traj, noise);
        r.jumps = noise.jumps.size();
        return r;
      },
      c.exec);

  auto report = c.report("simulate");
  double gap = 0.0, min_j = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& r = runs[i];
    std::ofstream os(c.file("trajectory_seed" + std::to_string(seeds[i]) + ".csv"));
    os << "t";
    for (int d = 0; d < c.model.dim; ++d) os << ",x_" << d + 1;
    os << ",J,jump_flag\n";
    for (std::size_t k = 0; k < r.traj.size(); ++k) {
      os << format_double(r.traj.times[k]);
      for (int d = 0; d < c.model.dim; ++d) os << ',' << format_double(r.traj.states[k][d]);
      os << ',' << format_double(r.jac.integrated.values[k]) << ',' << (r.traj.is_jump_node(k) ? 1 : 0)
         << '\n';
    }
    const std::string tag = "seed" + std::to_string(seeds[i]);
    report.add_metric(tag + ".jumps", static_cast<double>(r.jumps));
    report.add_metric(tag + ".J_T", r.jac.integrated.values.back());
    report.add_metric(tag + ".jacobian_gap", r.jac.max_relative_gap());
    gap = std::max(gap, r.jac.max_relative_gap());
    for (double j : r.jac.integrated.values) min_j = std::min(min_j, j);
    for (double j : r.jac.closed_form.values) min_j = std::min(min_j, j);
  }
  report.set_config("steps", static_cast<double>(tgrid.base_steps));
  report.set_config("jacobian", "integrated vs closed_form");
  report.add_metric("max_jacobian_gap", gap);
  report.add_metric("min_J", min_j);
  report.check_le("jacobian_gap", gap, c.s.tolerance("jacobian_gap", 1e-8));
  report.check_ge("min_J", min_j, std::numeric_limits<double>::min());
  c.result.reports.push_back(std::move(report));
}

CandidateFamily registry_candidate_or_throw(const ModelSpec& spec) {
  try {
    return registry_candidate(spec);
  } catch (const Error& e) {
    throw ScenarioError("candidate", 0, e.what());
  }
}

void verify_integral(Context& c) {
  const auto tgrid = TimeGrid::uniform(c.s.t0, c.s.T, c.path_steps(1000));
  FirstIntegralOptions opts;
  opts.refinement_levels = c.s.refinement_levels;
  opts.collect_rows = true;
  opts.exec = c.exec;
  const bool registry = c.s.candidate == "registry";
  const auto family = registry ? registry_candidate_or_throw(c.s.model) : coordinate_candidate();
  auto report = verify_first_integral(family, c.model, c.s.start(), c.seeds(), tgrid, opts);
  report.title = "verify-integral";
  report.set_config("candidate", c.s.candidate);
  report.set_config("base_steps", static_cast<double>(tgrid.base_steps));
  {
    std::ofstream os(c.file("residuals.csv"));
    write_residual_table(os, report.residuals);
  }
  report.check_le("divergent_seeds", report.metric("divergent_seeds"), 0.0);
  if (registry) {
    const bool exact = c.s.model.key == "pure_jump" || c.s.model.key == "additive";
    if (c.s.has_tolerance("max_drift") || exact) {
      report.check_le("max_drift", report.metric("max_drift"), c.s.tolerance("max_drift", 1e-10));
    }
    if (c.s.refinement_levels >= 1 && !exact) {
      report.check_ge("fitted_order", report.metric("fitted_order"), c.s.tolerance("fitted_order", 0.45));
    }
    c.result.reports.push_back(std::move(report));
    return;
  }
  FirstIntegralOptions ref_opts = opts;
  ref_opts.collect_rows = false;
  const auto reference =
      verify_first_integral(registry_candidate_or_throw(c.s.model), c.model, c.s.start(), c.seeds(), tgrid, ref_opts);
  const double ratio = report.metric("rms_drift") / reference.metric("rms_drift");
  report.add_metric("reference_rms_drift", reference.metric("rms_drift"));
  report.add_metric("control_ratio", ratio);
  report.check_ge("control_ratio", ratio, c.s.tolerance("control_ratio", 10.0));
  c.result.reports.push_back(std::move(report));
}

void verify_iw(Context& c) {
  const auto grid = c.s.space();
  const bool linear = c.s.iw_field == "linear";
  GridField initial;
  initial.grid = grid;
  initial.values.push_back(
      grid.sample([linear](const Vec& x) { return linear ? x[0] : std::sin(x[0]); }));
  FieldDifferential diff = zero_differential(c.model.dim, c.model.noise_dim);
  const double q = c.s.iw_q, d = c.s.iw_d;
  const int m = c.model.noise_dim;
  diff.Q = [q](double, const Vec&) { return q; };
  diff.D = [d, m](double, const Vec&) -> Vec { return Vec::Constant(m, d); };

  const auto seeds = c.seeds();
  const int levels = c.s.refinement_levels;
  const auto base = TimeGrid::uniform(c.s.t0, c.s.T, c.path_steps(200));
  std::vector<double> dts, errs;
  double worst = 0.0;
  auto report = c.report("verify-iw");
  std::vector<ResidualRow> rows;
  for (int level = 0; level <= levels; ++level) {
    IwOptions iw;
    iw.collect_rows = level == levels;
    const auto per_seed = ensemble_map(
        seeds.size(),
        [&](std::size_t i) {
          const auto noise = refine_noise(sample_noise(c.model, base, seeds[i]), level);
          const auto field = evolve_field(initial, diff, c.model.marks, noise);
          const auto traj = simulate_path(c.model, c.s.start(), noise);
          auto r = ito_wentzell_residual(diff, field, c.model, traj, noise, iw);
          for (auto& row : r.residuals) row.seed = seeds[i];
          return r;
        },
        c.exec);
    std::vector<double> rms_cont;
    double level_max = 0.0;
    for (const auto& r : per_seed) {
      rms_cont.push_back(r.metric("rms_residual_cont"));
      level_max = std::max({level_max, r.metric("max_residual_cont"), r.metric("max_residual_jump")});
      for (const auto& w : r.warnings) report.warn(w);
      if (iw.collect_rows) rows.insert(rows.end(), r.residuals.begin(), r.residuals.end());
    }
    const double dt = base.nominal_dt() / std::pow(2.0, level);
    const std::string prefix = "level" + std::to_string(level) + ".";
    report.add_metric(prefix + "dt", dt);
    report.add_metric(prefix + "max_residual", level_max);
    report.add_metric(prefix + "rms_residual_cont", rms(rms_cont));
    report.add_metric(prefix + "interp_error_estimate", per_seed.front().metric("interp_error_estimate"));
    dts.push_back(dt);
    errs.push_back(rms(rms_cont));
    worst = level_max;
  }
  report.set_config("field", c.s.iw_field);
  report.set_config("Q", q);
  report.set_config("D", d);
  report.add_metric("max_residual", worst);
  {
    std::ofstream os(c.file("residuals.csv"));
    write_residual_table(os, rows);
  }
  if (linear) {
    report.check_le("iw_max_residual", worst, c.s.tolerance("iw_max_residual", 1e-12));
  } else if (levels >= 1) {
    const double order = fit_order(dts, errs);
    report.add_metric("fitted_order", order);
    report.check_ge("iw_order", order, c.s.tolerance("iw_order", 0.45));
  }
  if (c.s.has_tolerance("iw_max_residual") && !linear) {
    report.check_le("iw_max_residual", worst, c.s.tolerance("iw_max_residual", 0.0));
  }
  report.residuals = std::move(rows);
  c.result.reports.push_back(std::move(report));
}

std::vector<Vec> support_starts(const SpatialGrid& grid, const std::vector<double>& rho0) {
  const std::size_t wanted = grid.dim() == 1 ? 21 : 64;
  const double peak = *std::max_element(rho0.begin(), rho0.end());
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < rho0.size(); ++j) {
    if (rho0[j] > 1e-2 * peak) support.push_back(j);
  }
  std::vector<Vec> out;
  const std::size_t n = std::min(wanted, support.size());
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(grid.point(support[n == 1 ? 0 : k * (support.size() - 1) / (n - 1)]));
  }
  return out;
}

void kernel(Context& c) {
  const auto grid = c.s.space();
  const auto rho0 = c.initial_density(grid);
  const auto tgrid = c.s.steps > 0 ? TimeGrid::uniform(c.s.t0, c.s.T, c.s.steps)
                                   : kernel_time_grid(c.model, grid, c.s.t0, c.s.T);
  const auto seeds = c.seeds();
  const auto tests = registry_test_functions();
  const double k_se = c.s.tolerance("global_se_multiple", 3.0);
  const double abs_allow = c.s.tolerance("global_abs", 1e-4);
  for (auto seed : seeds) {
    const auto noise = sample_noise(c.model, tgrid, seed);
    const auto field = solve_kernel_spde(c.model, grid, rho0, noise);
    write_snapshots(c.file("kernel_seed" + std::to_string(seed) + ".csv"), field.field,
                    snapshot_slices(field.field.times, c.s.snapshot_times));

    auto report = c.report("kernel.seed" + std::to_string(seed));
    describe_scheme(report, c, grid);
    report.set_config("base_steps", static_cast<double>(tgrid.base_steps));
    report.set_config("max_noise_step", noise.grid.max_step());
    double mass_gap = 0.0;
    for (double mass : field.mass) mass_gap = std::max(mass_gap, std::abs(mass - 1.0));
    report.add_metric("max_mass_gap", mass_gap);
    report.add_metric("boundary_loss", field.boundary_loss.back());
    report.add_metric("jump_mass_change", field.jump_mass_change.back());
    report.add_metric("max_pullback_det_error", field.max_pullback_det_error);
    report.check_le("mass_gap", mass_gap, c.s.tolerance("mass_gap", 1e-2));

    auto path = check_pathwise_invariant(field, c.model, noise, support_starts(grid, rho0));
    report.absorb(path, "pathwise");
    if (c.s.has_tolerance("pathwise_residual")) {
      report.check_le("pathwise_residual", path.metric("max_residual"), c.s.tolerance("pathwise_residual", 0.0));
    }
    auto global = check_global_invariants(field, c.model, noise, tests, c.s.mc_samples, seed ^ 0x5bd1e995ULL, c.exec);
    report.absorb(global, "global");
    for (const auto& t : tests) {
      if (t.name != "one" && t.name != "x" && !c.s.has_tolerance("global_abs")) continue;
      report.check_le("global." + t.name, global.metric("gap_" + t.name),
                      k_se * global.metric("se_" + t.name) + abs_allow);
    }
    c.result.reports.push_back(std::move(report));
  }
  if (c.s.kernel_members > 0) {
    auto link = expectation_link(c.model, grid, rho0, c.s.t0, c.s.T,
                                 seed_range(c.s.seed + 1000000, static_cast<std::size_t>(c.s.kernel_members)),
                                 c.exec);
    link.title = "kernel.expectation_link";
    describe_scheme(link, c, grid);
    c.result.reports.push_back(std::move(link));
  }
}

void forward(Context& c) {
  const auto grid = c.s.space();
  const auto p0 = c.initial_density(grid);
  const auto opts = c.solver();
  const auto density = solve_forward(c.model, grid, p0, c.s.t0, c.s.T, opts);
  write_snapshots(c.file("density.csv"), density.field,
                  snapshot_slices(density.field.times, c.s.snapshot_times));

  auto report = c.report("forward");
  describe_scheme(report, c, grid);
  report.set_config("scheme", to_string(opts.scheme));
  report.set_config("jump_form", to_string(opts.jump_form));
  report.set_config("steps", static_cast<double>(density.steps));
  report.set_config("dt", density.dt);
  const double loss = density.boundary_loss.back();
  const double drift = std::abs(density.mass.back() - 1.0);
  report.add_metric("final_mass", density.mass.back());
  report.add_metric("boundary_loss", loss);
  report.add_metric("jump_mass_change", density.jump_mass_change.back());
  report.add_metric("untracked_mass_change", std::abs(density.mass.back() + loss - 1.0));
  report.check_le("forward_mass", drift - std::abs(loss), c.s.tolerance("forward_mass", 1e-2));

  if (c.model.has_jumps()) {
    SolverOptions centered = opts;
    centered.jump_form = JumpForm::centered;
    const auto compensated = solve_forward(compensate_drift(c.model), grid, p0, c.s.t0, c.s.T, centered);
    const double l1 = l1_distance(grid, density.field.final(), compensated.field.final());
    report.add_metric("l1_poisson_vs_centered", l1);
    if (c.s.initial.kind == "gaussian" || c.s.has_tolerance("compensation")) report.check_le("compensation", l1, c.s.tolerance("compensation", 1e-2));
  }
  c.result.reports.push_back(std::move(report));
}

void backward(Context& c) {
  const auto grid = c.s.space();
  const auto opts = c.solver();
  for (const auto& name : c.s.phi) {
    const auto phi = grid.sample(terminal_function(name));
    const auto v = solve_backward(c.model, grid, phi, c.s.t0, c.s.T, opts);
    write_snapshots(c.file("backward_" + name + ".csv"), v.field,
                    snapshot_slices(v.field.times, c.s.snapshot_times));
    auto report = c.report("backward." + name);
    describe_scheme(report, c, grid);
    report.set_config("scheme", to_string(opts.scheme));
    report.set_config("steps", static_cast<double>(v.steps));
    report.set_config("dt", v.dt);
    const auto& v0 = v.field.at(0);
    report.add_metric("v_start_min", *std::min_element(v0.begin(), v0.end()));
    report.add_metric("v_start_max", *std::max_element(v0.begin(), v0.end()));
    if (name == "one") {
      double worst = 0.0;
      for (const auto& slice : v.field.values) {
        for (double x : slice) worst = std::max(worst, std::abs(x - 1.0));
      }
      report.add_metric("max_abs_error", worst);
      report.check_le("backward_const", worst, c.s.tolerance("backward_const", 1e-6));
    }
    c.result.reports.push_back(std::move(report));
  }
}

void duality_pipeline(Context& c) {
  const auto grid = c.s.space();
  const auto p0 = c.initial_density(grid);
  const auto opts = c.solver();
  for (const auto& name : c.s.phi) {
    auto report = duality(c.model, grid, p0, grid.sample(terminal_function(name)), c.s.t0, c.s.T, opts);
    report.title = "duality." + name;
    describe_scheme(report, c, grid);
    report.check_le("duality", report.metric("max_deviation"), c.s.tolerance("duality", 5e-2));
    c.result.reports.push_back(std::move(report));
  }
  const double s = c.s.t0 + c.s.s_fraction * (c.s.T - c.s.t0);
  auto chapman = chapman_consistency(c.model, grid, p0, c.s.t0, s, c.s.T, c.s.bin_cells, opts);
  chapman.title = "duality.chapman";
  describe_scheme(chapman, c, grid);
  chapman.check_le("chapman", chapman.metric("l1_gap"), c.s.tolerance("chapman", 5e-2));
  c.result.reports.push_back(std::move(chapman));
}

void compare_mc(Context& c) {
  require_1d(c, "compare-mc");
  const auto grid = c.s.space();
  const auto p0 = c.initial_density(grid);
  const auto density = solve_forward(c.model, grid, p0, c.s.t0, c.s.T, c.solver());
  const auto& p = density.field.final();

  InitialSampler init;
  if (c.s.initial.kind == "delta") {
    const Vec x0 = Eigen::Map<const Vec>(c.s.initial.mean.data(), 1);
    init = [x0](std::mt19937_64&) { return x0; };
  } else {
    const auto sampler = std::make_shared<DensitySampler>(grid, p0);
    init = [sampler](std::mt19937_64& rng) { return sampler->sample(rng); };
  }
  const auto edges = uniform_edges(c.s.lo, c.s.hi, c.s.mc_bins);
  const int steps = c.path_steps(500);
  const auto hist = monte_carlo_density(c.model, init, c.s.mc_paths, edges, c.s.t0, c.s.T, steps, c.s.seed, c.exec);
  const auto masses = bin_masses(grid, p, edges);
  {
    std::ofstream os(c.file("histogram.csv"));
    os << "bin_lo,bin_hi,count,mc_density,mc_stderr,pde_density\n";
    for (std::size_t b = 0; b < hist.bins(); ++b) {
      os << format_double(edges[b]) << ',' << format_double(edges[b + 1]) << ',' << hist.counts[b] << ','
         << format_double(hist.density[b]) << ',' << format_double(hist.stderr_density[b]) << ','
         << format_double(masses[b] / hist.width(b)) << '\n';
    }
  }
  auto report = c.report("compare-mc");
  describe_scheme(report, c, grid);
  report.set_config("paths", static_cast<double>(c.s.mc_paths));
  report.set_config("bins", static_cast<double>(c.s.mc_bins));
  report.set_config("path_steps", static_cast<double>(steps));
  report.set_config("pde_steps", static_cast<double>(density.steps));
  report.add_metric("paths_used", static_cast<double>(hist.paths));
  report.add_metric("paths_diverged", static_cast<double>(hist.diverged));
  report.add_metric("paths_outside", static_cast<double>(hist.outside));
  const double l1 = histogram_l1(hist, grid, p);
  report.add_metric("l1", l1);
  for (const auto& w : hist.warnings) report.warn(w);
  report.check_le("mc_l1", l1, c.s.tolerance("mc_l1", 5e-2));
  c.result.reports.push_back(std::move(report));
}

void write_report(const Context& c) {
  std::ofstream os(c.out / "report.txt");
  os << "pipeline: " << c.result.name << "\n[scenario]\n";
  for (const auto& [k, v] : c.s.echo) os << k << ": " << v << "\n";
  for (const auto& r : c.result.reports) os << "\n" << r.to_text();
  os << "\nstatus: " << (c.result.passed() ? "pass" : "fail") << "\n";
}

PipelineOutput run_one(const std::string& name, const Scenario& s, const fs::path& out, Exec exec) {
  static const std::map<std::string, void (*)(Context&)> table = {
      {"simulate", simulate}, {"verify-integral", verify_integral},
      {"verify-iw", verify_iw}, {"kernel", kernel},
      {"forward", forward},   {"backward", backward},
      {"duality", duality_pipeline}, {"compare-mc", compare_mc},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw ScenarioError("pipeline", 0, "unknown pipeline '" + name + "'");
  fs::create_directories(out);
  Context c{s, make_model(s.model), out, exec, {}};
  c.result.name = name;
  it->second(c);
  write_report(c);
  c.result.files.push_back(out / "report.txt");
  return std::move(c.result);
}

}  // namespace

std::vector<PipelineOutput> run_pipeline(const std::string& name, const Scenario& scenario,
                                         const fs::path& out, Exec exec) {
  if (name != "all") return {run_one(name, scenario, out, exec)};
  std::vector<PipelineOutput> results;
  for (const auto& n : pipeline_names()) {
    if (n == "compare-mc" && make_model(scenario.model).dim != 1) continue;
    results.push_back(run_one(n, scenario, out / n, exec));
  }
  std::ofstream os(out / "summary.txt");
  os << "[scenario]\n";
  for (const auto& [k, v] : scenario.echo) os << k << ": " << v << "\n";
  os << "[pipelines]\n";
  for (const auto& r : results) os << r.name << ": " << (r.passed() ? "pass" : "fail") << "\n";
  return results;
}

}  // namespace jumpflow
