#include "jumpflow/stochastic_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "jumpflow/errors.hpp"
#include "jumpflow/jacobian.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/stats.hpp"

namespace jumpflow {

FieldDifferential zero_differential(int dim, int noise_dim) {
  FieldDifferential diff;
  diff.dim = dim;
  diff.noise_dim = noise_dim;
  diff.Q = [](double, const Vec&) { return 0.0; };
  diff.D = [noise_dim](double, const Vec&) -> Vec { return Vec::Zero(noise_dim); };
  diff.G = [](double, const Vec&, const Vec&) { return 0.0; };
  diff.D_gradient = [dim, noise_dim](double, const Vec&) -> Mat { return Mat::Zero(dim, noise_dim); };
  return diff;
}

Mat differential_gradient(const FieldDifferential& diff, double t, const Vec& x) {
  if (diff.D_gradient) return diff.D_gradient(t, x);
  Mat out(diff.dim, diff.noise_dim);
  Vec xp = x, xm = x;
  for (int i = 0; i < diff.dim; ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    out.row(i) = ((diff.D(t, xp) - diff.D(t, xm)) / (2.0 * h)).transpose();
    xp[i] = xm[i] = x[i];
  }
  return out;
}

Vec candidate_gradient(const CandidateIntegral& u, double t, const Vec& x) {
  if (u.gradient) return u.gradient(t, x);
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (u.u(t, xp) - u.u(t, xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

Mat candidate_hessian(const CandidateIntegral& u, double t, const Vec& x) {
  if (u.hessian) return u.hessian(t, x);
  const auto n = x.size();
  Mat h(n, n);
  Vec xp = x, xm = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-4 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    h.col(j) = (candidate_gradient(u, t, xp) - candidate_gradient(u, t, xm)) / (2.0 * step);
    xp[j] = xm[j] = x[j];
  }
  return 0.5 * (h + h.transpose());
}

CandidateFamily deterministic_family(CandidateIntegral u) {
  return [u = std::move(u)](const NoiseRealization&) { return u; };
}

namespace {

// Sum of mark component `c` over jumps with time <= t.
double jump_sum(const NoiseRealization& noise, const MarkMeasure& marks, double t, int c) {
  double acc = 0.0;
  for (const auto& e : noise.jumps) {
    if (e.time > t) break;
    acc += marks.atoms[e.atom].mark[c];
  }
  return acc;
}

CandidateIntegral linear_in_x1(int dim, std::function<double(double)> offset) {
  CandidateIntegral u;
  u.u = [offset](double t, const Vec& x) { return x[0] - offset(t); };
  u.gradient = [dim](double, const Vec&) -> Vec {
    Vec g = Vec::Zero(dim);
    g[0] = 1.0;
    return g;
  };
  u.hessian = [dim](double, const Vec&) -> Mat { return Mat::Zero(dim, dim); };
  return u;
}

}  // namespace

CandidateFamily registry_candidate(const ModelSpec& spec) {
  const JumpDiffusionModel model = make_model(spec);
  auto params = registry_defaults(spec.key);
  for (const auto& [k, v] : spec.params) params[k] = v;
  const MarkMeasure marks = model.marks;
  const int dim = model.dim;

  if (spec.key == "additive") {
    const double a = params.at("drift");
    const double sigma = params.at("sigma");
    return [=](const NoiseRealization& noise) {
      return linear_in_x1(dim, [=, &noise](double t) {
        return a * t + sigma * noise.wiener_at(t)[0] + jump_sum(noise, marks, t, 0);
      });
    };
  }
  if (spec.key == "pure_jump") {
    return [=](const NoiseRealization& noise) {
      return linear_in_x1(dim, [=, &noise](double t) { return jump_sum(noise, marks, t, 0); });
    };
  }
  if (spec.key == "geometric") {
    const double alpha = params.at("alpha");
    const double sigma = params.at("sigma");
    return [=](const NoiseRealization& noise) {
      auto scale = [=, &noise](double t) {
        double prod = 1.0;
        for (const auto& e : noise.jumps) {
          if (e.time > t) break;
          prod *= 1.0 + marks.atoms[e.atom].mark[0];
        }
        return std::exp(-(alpha - 0.5 * sigma * sigma) * t - sigma * noise.wiener_at(t)[0]) / prod;
      };
      CandidateIntegral u;
      u.u = [scale](double t, const Vec& x) { return x[0] * scale(t); };
      u.gradient = [scale](double t, const Vec&) -> Vec { return Vec::Constant(1, scale(t)); };
      u.hessian = [](double, const Vec&) -> Mat { return Mat::Zero(1, 1); };
      return u;
    };
  }
  if (spec.key == "ou_jump") {
    const double theta = params.at("theta");
    const double sigma = params.at("sigma");
    return [=](const NoiseRealization& noise) {
      // left-point sums of e^{theta s} dw at each node
      auto stoch = std::make_shared<std::vector<double>>(noise.grid.nodes.size(), 0.0);
      for (std::size_t i = 0; i < noise.steps(); ++i) {
        (*stoch)[i + 1] = (*stoch)[i] + std::exp(theta * noise.grid.nodes[i]) * noise.increment(i)[0];
      }
      auto offset = [=, &noise](double t) {
        const std::size_t i = noise.node_index(t);
        double jumps = 0.0;
        for (const auto& e : noise.jumps) {
          if (e.time > t) break;
          jumps += std::exp(theta * e.time) * marks.atoms[e.atom].mark[0];
        }
        return sigma * (*stoch)[i] + jumps;
      };
      CandidateIntegral u;
      u.u = [=](double t, const Vec& x) { return std::exp(theta * t) * x[0] - offset(t); };
      u.gradient = [=](double t, const Vec&) -> Vec { return Vec::Constant(1, std::exp(theta * t)); };
      u.hessian = [](double, const Vec&) -> Mat { return Mat::Zero(1, 1); };
      return u;
    };
  }
  if (spec.key == "rotation2d") {
    if (params.at("sigma") != 0.0 || !marks.empty()) {
      throw Error("rotation2d has a closed-form first integral only without noise and jumps");
    }
    CandidateIntegral u;
    u.u = [](double, const Vec& x) { return x.squaredNorm(); };
    u.gradient = [](double, const Vec& x) -> Vec { return 2.0 * x; };
    u.hessian = [](double, const Vec&) -> Mat { return 2.0 * Mat::Identity(2, 2); };
    return deterministic_family(u);
  }
  throw Error("no closed-form first integral for model '" + spec.key + "'");
}

CandidateFamily coordinate_candidate() {
  return [](const NoiseRealization&) {
    CandidateIntegral u;
    u.u = [](double, const Vec& x) { return x[0]; };
    u.gradient = [](double, const Vec& x) -> Vec {
      Vec g = Vec::Zero(x.size());
      g[0] = 1.0;
      return g;
    };
    u.hessian = [](double, const Vec& x) -> Mat { return Mat::Zero(x.size(), x.size()); };
    return u;
  };
}

namespace {

// Q and D shared by both builders.
FieldDifferential continuous_part(const CandidateIntegral& u, const JumpDiffusionModel& model) {
  FieldDifferential diff;
  diff.dim = model.dim;
  diff.noise_dim = model.noise_dim;
  const int n = model.dim;
  const int m = model.noise_dim;
  diff.Q = [u, model, n, m](double t, const Vec& x) {
    const Vec a = model.drift(t, x);
    const Vec grad = candidate_gradient(u, t, x);
    const Mat hess = candidate_hessian(u, t, x);
    double value = a.dot(grad);
    if (m > 0) {
      const Mat b = model.diffusion(t, x);
      const auto db = diffusion_gradient(model, t, x);
      value += 0.5 * (b * b.transpose()).cwiseProduct(hess).sum();
      // b_ik d_i (b_jk d_j u) = b_ik [(d_i b_jk) d_j u + b_jk H_ji]
      double corr = 0.0;
      for (int k = 0; k < m; ++k) {
        for (int i = 0; i < n; ++i) {
          double inner = 0.0;
          for (int j = 0; j < n; ++j) inner += db[i](j, k) * grad[j] + b(j, k) * hess(j, i);
          corr += b(i, k) * inner;
        }
      }
      value -= corr;
    }
    return -value;
  };
  diff.D = [u, model, m](double t, const Vec& x) -> Vec {
    if (m == 0) return Vec::Zero(0);
    return -(model.diffusion(t, x).transpose() * candidate_gradient(u, t, x));
  };
  diff.D_gradient = [u, model, n, m](double t, const Vec& x) -> Mat {
    Mat out = Mat::Zero(n, m);
    if (m == 0) return out;
    const Mat b = model.diffusion(t, x);
    const auto db = diffusion_gradient(model, t, x);
    const Vec grad = candidate_gradient(u, t, x);
    const Mat hess = candidate_hessian(u, t, x);
    for (int l = 0; l < n; ++l) {
      for (int k = 0; k < m; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += db[l](i, k) * grad[i] + b(i, k) * hess(i, l);
        out(l, k) = -acc;
      }
    }
    return out;
  };
  return diff;
}

}  // namespace

FieldDifferential first_integral_coeffs_xindep(const CandidateIntegral& u,
                                               const JumpDiffusionModel& model,
                                               const BuilderOptions& options) {
  if (model.has_jumps()) {
    std::mt19937_64 rng(options.probe_seed);
    std::uniform_real_distribution<double> ux(options.lo, options.hi);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    for (int p = 0; p < options.probes; ++p) {
      const double t = ut(rng);
      Vec x(model.dim);
      for (int i = 0; i < model.dim; ++i) x[i] = ux(rng);
      for (const auto& a : model.marks.atoms) {
        const double norm = jump_jacobian(model, t, x, a.mark).cwiseAbs().maxCoeff();
        if (norm > options.x_independence_tol) {
          throw WrongVariantError("jump amplitude depends on x (|dg/dx| = " +
                                  std::to_string(norm) +
                                  "); use first_integral_coeffs_xdep");
        }
      }
    }
  }
  FieldDifferential diff = continuous_part(u, model);
  diff.G = [u, model](double t, const Vec& x, const Vec& mark) {
    return u.u(t, x - model.jump(t, x, mark)) - u.u(t, x);
  };
  return diff;
}

FieldDifferential first_integral_coeffs_xdep(const CandidateIntegral& u,
                                             const JumpDiffusionModel& model) {
  FieldDifferential diff = continuous_part(u, model);
  diff.G = [u, model](double t, const Vec& x, const Vec& mark) {
    const Vec pre = inverse_jump_map(model, t, x, mark);
    return u.u(t, x - model.jump(t, pre, mark)) - u.u(t, x);
  };
  return diff;
}

GridField evolve_field(const GridField& initial, const FieldDifferential& diff,
                       const MarkMeasure& marks, const NoiseRealization& noise, Exec exec) {
  if (initial.values.empty()) throw Error("evolve_field needs an initial slice");
  const SpatialGrid& grid = initial.grid;
  const std::size_t size = grid.size();
  std::vector<Vec> points(size);
  for (std::size_t j = 0; j < size; ++j) points[j] = grid.point(j);

  GridField field;
  field.grid = grid;
  field.times = noise.grid.nodes;
  field.values.reserve(noise.grid.nodes.size());
  field.values.push_back(initial.values.front());

  for (std::size_t i = 0; i < noise.steps(); ++i) {
    const double t = noise.grid.nodes[i];
    const double dt = noise.dt(i);
    const Vec dw = noise.increment(i);
    const auto& prev = field.values.back();
    std::vector<double> next(size);
    parallel_for(size, [&](std::size_t j) {
      double v = prev[j] + diff.Q(t, points[j]) * dt;
      if (dw.size() > 0) v += diff.D(t, points[j]).dot(dw);
      next[j] = v;
    }, exec);
    const auto jumps = noise.jumps_at(i + 1);
    if (!jumps.empty()) {
      field.left_limits[i + 1] = next;
      for (const auto& e : jumps) {
        const Vec& mark = marks.atoms[e.atom].mark;
        parallel_for(size, [&](std::size_t j) { next[j] += diff.G(e.time, points[j], mark); }, exec);
      }
    }
    for (double v : next) {
      if (!std::isfinite(v)) throw DivergenceError("field became non-finite", i + 1);
    }
    field.values.push_back(std::move(next));
  }
  return field;
}

double interpolation_error_estimate(const SpatialGrid& grid, std::span<const double> values) {
  const int n0 = grid.axis(0).points;
  const int rows = grid.dim() == 1 ? 1 : grid.axis(1).points;
  double worst = 0.0;
  for (int r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(n0);
    for (int j = 3; j + 3 < n0; j += 2) {
      const double coarse = (-values[base + j - 3] + 9.0 * values[base + j - 1] +
                             9.0 * values[base + j + 1] - values[base + j + 3]) / 16.0;
      worst = std::max(worst, std::abs(values[base + j] - coarse));
    }
  }
  return worst / 16.0;
}

namespace {

bool inside_margin(const SpatialGrid& grid, const Vec& x, int margin) {
  for (int d = 0; d < grid.dim(); ++d) {
    const auto& axis = grid.axis(d);
    const double pad = margin * axis.spacing();
    if (!(x[d] >= axis.lo + pad && x[d] <= axis.hi - pad)) return false;
  }
  return true;
}

}  // namespace

VerificationReport ito_wentzell_residual(const FieldDifferential& diff, const GridField& field,
                                         const JumpDiffusionModel& model, const Trajectory& traj,
                                         const NoiseRealization& noise,
                                         const IwOptions& options) {
  if (field.size() != traj.size() || traj.size() != noise.grid.nodes.size()) {
    throw Error("field, trajectory and noise must share one time grid");
  }
  const SpatialGrid& grid = field.grid;
  const int n = model.dim;
  const int m = model.noise_dim;

  std::vector<double> cont, jump;
  std::size_t excluded = 0;
  double total_abs = 0.0;
  VerificationReport report;
  report.title = "ito-wentzell";

  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const double t = traj.times[i];
    const Vec& x = traj.states[i];
    const Vec& pre = traj.left_limit(i + 1);
    const Vec& post = traj.states[i + 1];
    if (!inside_margin(grid, x, options.margin_cells) ||
        !inside_margin(grid, pre, options.margin_cells) ||
        !inside_margin(grid, post, options.margin_cells)) {
      ++excluded;
      continue;
    }
    const auto& f_now = field.at(i);
    const auto& f_pre = field.left_limit(i + 1);
    const auto& f_next = field.at(i + 1);

    const LocalJet jet = interpolate_jet(grid, f_now, x);
    const double dt = noise.dt(i);
    double rhs = diff.Q(t, x) * dt;
    double drift = model.drift(t, x).dot(jet.gradient);
    if (m > 0) {
      const Vec dw = noise.increment(i);
      const Mat b = model.diffusion(t, x);
      const Mat dD = differential_gradient(diff, t, x);
      rhs += diff.D(t, x).dot(dw);
      drift += 0.5 * (b * b.transpose()).cwiseProduct(jet.hessian).sum();
      for (int k = 0; k < m; ++k) {
        for (int d = 0; d < n; ++d) drift += b(d, k) * dD(d, k);
      }
      rhs += (b.transpose() * jet.gradient).dot(dw);
    }
    rhs += drift * dt;
    const double direct_cont = interpolate(grid, f_pre, pre) - jet.value;
    const double r_cont = direct_cont - rhs;

    double r_jump = 0.0;
    const auto jumps = noise.jumps_at(i + 1);
    if (!jumps.empty()) {
      // field between sequential jumps at one node: F^- plus the G's applied so far
      std::vector<std::pair<double, Vec>> applied;
      auto field_at = [&](const Vec& y) {
        double v = interpolate(grid, f_pre, y);
        for (const auto& [tau, mark] : applied) v += diff.G(tau, y, mark);
        return v;
      };
      Vec state = pre;
      double rhs_jump = 0.0;
      for (const auto& e : jumps) {
        const Vec& mark = model.marks.atoms[e.atom].mark;
        const Vec moved = state + model.jump(e.time, state, mark);
        rhs_jump += field_at(moved) - field_at(state) + diff.G(e.time, moved, mark);
        applied.emplace_back(e.time, mark);
        state = moved;
      }
      const double direct_jump = interpolate(grid, f_next, post) - interpolate(grid, f_pre, pre);
      r_jump = direct_jump - rhs_jump;
    }
    cont.push_back(r_cont);
    if (!jumps.empty()) jump.push_back(r_jump);
    total_abs += std::abs(r_cont) + std::abs(r_jump);
    if (options.collect_rows) report.residuals.push_back({noise.seed, traj.times[i + 1], r_cont, r_jump});
  }

  const double interp_err = std::max({interpolation_error_estimate(grid, field.values.front()),
                                      interpolation_error_estimate(grid, field.values[field.size() / 2]),
                                      interpolation_error_estimate(grid, field.values.back())});
  report.set_config("seed", static_cast<double>(noise.seed));
  report.set_config("dt", noise.grid.nominal_dt());
  report.set_config("steps", static_cast<double>(noise.steps()));
  report.add_metric("max_residual_cont", max_abs(cont));
  report.add_metric("rms_residual_cont", rms(cont));
  report.add_metric("max_residual_jump", max_abs(jump));
  report.add_metric("rms_residual_jump", rms(jump));
  report.add_metric("total_abs_residual", total_abs);
  report.add_metric("interp_error_estimate", interp_err);
  report.add_metric("steps_used", static_cast<double>(cont.size()));
  report.add_metric("steps_excluded", static_cast<double>(excluded));
  report.add_metric("jump_steps", static_cast<double>(jump.size()));
  if (excluded > 0) {
    report.warn("partial coverage: " + std::to_string(excluded) + " steps left the grid interior");
  }
  return report;
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = base + i;
  return seeds;
}

namespace {

struct SeedDrift {
  bool diverged = false;
  double sup = 0.0;
  std::vector<ResidualRow> rows;
};

void summarize_level(VerificationReport& report, const std::string& prefix,
                     const std::vector<SeedDrift>& runs, double& max_out, double& rms_out) {
  std::vector<double> sups;
  std::size_t diverged = 0;
  for (const auto& r : runs) {
    if (r.diverged) {
      ++diverged;
    } else {
      sups.push_back(r.sup);
    }
  }
  max_out = max_abs(sups);
  rms_out = rms(sups);
  report.add_metric(prefix + "max_drift", max_out);
  report.add_metric(prefix + "rms_drift", rms_out);
  report.add_metric(prefix + "divergent_seeds", static_cast<double>(diverged));
  if (diverged > 0) report.warn(prefix + std::to_string(diverged) + " divergent seeds skipped");
}

}  // namespace

VerificationReport verify_first_integral(const CandidateFamily& family,
                                         const JumpDiffusionModel& model, const Vec& x0,
                                         const std::vector<std::uint64_t>& seeds,
                                         const TimeGrid& grid,
                                         const FirstIntegralOptions& options) {
  VerificationReport report;
  report.title = "first-integral";
  report.set_config("model", model.name);
  report.set_config("t0", grid.t0);
  report.set_config("T", grid.T);
  report.set_config("dt", grid.nominal_dt());
  report.set_config("seeds", static_cast<double>(seeds.size()));
  report.set_config("refinement_levels", static_cast<double>(options.refinement_levels));

  std::vector<double> dts, errors;
  std::vector<SeedDrift> finest;
  for (int level = 0; level <= options.refinement_levels; ++level) {
    const bool last = level == options.refinement_levels;
    auto runs = ensemble_map(seeds.size(), [&](std::size_t s) {
      SeedDrift out;
      try {
        const NoiseRealization noise = refine_noise(sample_noise(model, grid, seeds[s]), level);
        const CandidateIntegral u = family(noise);
        const Trajectory traj = simulate_path(model, x0, noise);
        const double u0 = u.u(traj.times[0], traj.states[0]);
        double prev = u0;
        for (std::size_t i = 1; i < traj.size(); ++i) {
          const double v = u.u(traj.times[i], traj.states[i]);
          out.sup = std::max(out.sup, std::abs(v - u0));
          if (last && options.collect_rows) {
            const bool jumped = traj.is_jump_node(i);
            out.rows.push_back({seeds[s], traj.times[i], jumped ? 0.0 : v - prev, jumped ? v - prev : 0.0});
          }
          prev = v;
        }
        if (!std::isfinite(out.sup)) out.diverged = true;
      } catch (const DivergenceError&) {
        out.diverged = true;
      }
      return out;
    }, options.exec);
    double mx = 0.0, r = 0.0;
    const std::string prefix = "level" + std::to_string(level) + ".";
    const double dt = grid.nominal_dt() / std::pow(2.0, level);
    report.add_metric(prefix + "dt", dt);
    summarize_level(report, prefix, runs, mx, r);
    dts.push_back(dt);
    errors.push_back(r);
    if (last) finest = std::move(runs);
  }
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    report.add_metric("seed_max[" + std::to_string(seeds[s]) + "]", finest[s].diverged ? NAN : finest[s].sup);
    for (auto& row : finest[s].rows) report.residuals.push_back(row);
  }
  double mx = 0.0, r = 0.0;
  summarize_level(report, "", finest, mx, r);
  if (options.refinement_levels >= 1) report.add_metric("fitted_order", fit_order(dts, errors));
  return report;
}

VerificationReport verify_first_integral_field(
    const std::function<GridField(const NoiseRealization&)>& make_field,
    const JumpDiffusionModel& model, const Vec& x0, const std::vector<std::uint64_t>& seeds,
    const TimeGrid& grid, Exec exec) {
  VerificationReport report;
  report.title = "first-integral-field";
  report.set_config("model", model.name);
  report.set_config("dt", grid.nominal_dt());
  report.set_config("seeds", static_cast<double>(seeds.size()));
  std::vector<std::size_t> excluded(seeds.size(), 0);
  auto runs = ensemble_map(seeds.size(), [&](std::size_t s) {
    SeedDrift out;
    try {
      const NoiseRealization noise = sample_noise(model, grid, seeds[s]);
      const GridField field = make_field(noise);
      const Trajectory traj = simulate_path(model, x0, noise);
      const double u0 = interpolate(field.grid, field.at(0), x0);
      for (std::size_t i = 1; i < traj.size(); ++i) {
        if (!field.grid.contains(traj.states[i])) {
          ++excluded[s];
          continue;
        }
        out.sup = std::max(out.sup, std::abs(interpolate(field.grid, field.at(i), traj.states[i]) - u0));
      }
    } catch (const DivergenceError&) {
      out.diverged = true;
    }
    return out;
  }, exec);
  double mx = 0.0, r = 0.0;
  summarize_level(report, "", runs, mx, r);
  std::size_t total_excluded = 0;
  for (auto e : excluded) total_excluded += e;
  report.add_metric("nodes_excluded", static_cast<double>(total_excluded));
  if (total_excluded > 0) report.warn("paths left the field grid at " + std::to_string(total_excluded) + " nodes");
  return report;
}

}  // namespace jumpflow
