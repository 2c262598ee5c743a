#include <cmath>

#include <doctest.h>

#include "jumpflow/densities.hpp"
#include "jumpflow/errors.hpp"
#include "jumpflow/jacobian.hpp"
#include "jumpflow/kernel_spde.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/registry.hpp"
#include "jumpflow/stochastic_calculus.hpp"
#include "oracles.hpp"

using namespace jumpflow;

namespace {

Vec one(double v) { return Vec::Constant(1, v); }

const SpatialGrid& line512() {
  static const auto grid = SpatialGrid::line(-5.0, 5.0, 512);
  return grid;
}

NoiseRealization first_jump_noise(const JumpDiffusionModel& model, const TimeGrid& grid) {
  for (std::uint64_t seed = 1;; ++seed) {
    auto noise = sample_noise(model, grid, seed);
    if (noise.jumps.size() == 1) return noise;
  }
}

}  // namespace

TEST_SUITE("kernel_spde") {

TEST_CASE("static model leaves the kernel unchanged") {
  const auto model = make_additive(Vec::Zero(1), Mat::Zero(1, 1));
  const auto rho0 = gaussian_field(line512(), one(0.3), 0.2);
  const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 0.5, 50), 1);
  const auto kernel = solve_kernel_spde(model, line512(), rho0, noise);
  for (const auto& slice : kernel.field.values) CHECK(slice == rho0);

  std::vector<Vec> starts;
  for (double x = -1.0; x <= 1.5; x += 0.25) starts.push_back(one(x));
  CHECK(check_pathwise_invariant(kernel, model, noise, starts).metric("max_residual") <= 1e-8);

  const auto global = check_global_invariants(kernel, model, noise, registry_test_functions(), 10000, 3);
  CHECK(global.metric("gap_x2") <= 1e-10 + 3.0 * global.metric("se_x2"));
  CHECK(global.metric("gap_one") <= 1e-12);
}

TEST_CASE("constant advection transports the kernel") {
  const double c = 1.0;
  const auto model = make_additive(Vec::Constant(1, c), Mat::Zero(1, 1));
  const auto rho0 = gaussian_field(line512(), one(-1.0), 0.5);
  const auto noise = sample_noise(model, kernel_time_grid(model, line512(), 0.0, 0.5), 1);
  const auto kernel = solve_kernel_spde(model, line512(), rho0, noise);
  const double norm = integrate(line512(), line512().sample([](const Vec& x) { return oracle::normal_pdf(x[0], -1.0, 0.5); }));
  const auto exact = line512().sample([&](const Vec& x) { return oracle::normal_pdf(x[0] - 0.5 * c, -1.0, 0.5) / norm; });
  CHECK(l1_distance(line512(), kernel.field.final(), exact) <= 1e-2);
}

TEST_CASE("constant-shift jump pulls the kernel back") {
  const auto& grid = line512();
  for (double shift : {51 * grid.axis(0).spacing(), 0.37}) {
    const auto model = make_pure_jump({atom(shift, 2.0)});
    const auto rho0 = gaussian_field(grid, one(-0.5), 0.3);
    const auto noise = first_jump_noise(model, TimeGrid::uniform(0.0, 1.0, 20));
    const auto kernel = solve_kernel_spde(model, grid, rho0, noise);
    CHECK(kernel.max_pullback_det_error <= 1e-12);
    const auto node = noise.jumps.front().node;
    const auto& pre = kernel.field.left_limit(node);
    const auto& post = kernel.field.at(node);
    CHECK(pre == rho0);
    double err = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      err = std::max(err, std::abs(post[j] - interpolate(grid, pre, grid.point(j) - one(shift))));
    }
    CHECK(err <= 1e-8);
    if (shift < 0.3) {
      const auto shifted = grid.sample([&](const Vec& x) { return interpolate(grid, rho0, x - one(shift)); });
      CHECK(max_abs_difference(post, shifted) <= 1e-12);
    }
  }
}

TEST_CASE("linear flow matches the closed-form kernel pathwise") {
  const double alpha = 0.5;
  const auto model = make_geometric(alpha, 0.0);
  const auto rho0 = gaussian_field(line512(), one(0.3), 0.16);
  const auto noise = sample_noise(model, kernel_time_grid(model, line512(), 0.0, 0.5), 3);
  const auto kernel = solve_kernel_spde(model, line512(), rho0, noise);
  std::vector<Vec> starts;
  for (double x = -1.0; x <= 1.6; x += 0.1) starts.push_back(one(x));
  CHECK(check_pathwise_invariant(kernel, model, noise, starts).metric("max_residual") <= 1e-2);

  const auto traj = simulate_path(model, one(0.3), noise);
  const auto jac = evolve_jacobian(model, traj, noise);
  CHECK(jac.integrated.values.back() == doctest::Approx(std::exp(alpha * 0.5)).epsilon(1e-3));
  CHECK(check_pathwise_invariant(kernel, traj, jac.integrated).metric("max_residual") <= 1e-2);
}

TEST_CASE("pathwise residual shrinks under joint refinement") {
  const double alpha = 0.5;
  const auto model = make_geometric(alpha, 0.0);
  std::vector<double> hs, errs;
  for (int points : {128, 256, 512, 1024}) {
    const auto grid = SpatialGrid::line(-5.0, 5.0, points);
    const auto rho0 = gaussian_field(grid, one(0.3), 0.16);
    const auto noise = sample_noise(model, kernel_time_grid(model, grid, 0.0, 0.5), 1);
    const auto kernel = solve_kernel_spde(model, grid, rho0, noise);
    std::vector<Vec> starts;
    for (double x = -0.5; x <= 1.1; x += 0.1) starts.push_back(one(x));
    hs.push_back(grid.axis(0).spacing());
    errs.push_back(check_pathwise_invariant(kernel, model, noise, starts).metric("max_residual"));
  }
  CHECK(oracle::slope(hs, errs) >= 0.8);
}

TEST_CASE("registry kernels conserve mass") {
  for (const std::string key : {"ou_jump", "geometric", "additive"}) {
    const auto model = make_model({key, {}, std::nullopt});
    const auto rho0 = gaussian_field(line512(), one(0.5), 0.25);
    const auto noise = sample_noise(model, kernel_time_grid(model, line512(), 0.0, 0.5), 2);
    const auto kernel = solve_kernel_spde(model, line512(), rho0, noise);
    for (std::size_t i = 0; i < kernel.mass.size(); ++i) {
      CHECK(std::abs(kernel.mass[i] - 1.0) <= 1e-2);
      CHECK(std::abs(kernel.mass[i] + kernel.boundary_loss[i] - kernel.jump_mass_change[i] - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("global invariants on ou_jump") {
  const auto model = make_model({"ou_jump", {}, std::nullopt});
  const auto rho0 = gaussian_field(line512(), one(0.5), 0.25);
  const auto noise = sample_noise(model, kernel_time_grid(model, line512(), 0.0, 0.5), 4);
  const auto kernel = solve_kernel_spde(model, line512(), rho0, noise);
  const auto r = check_global_invariants(kernel, model, noise, registry_test_functions(), 10000, 11);
  CHECK(r.metric("gap_x") <= 3.0 * r.metric("se_x"));
  CHECK(std::abs(r.metric("lhs_one") - 1.0) <= 1e-6);
  CHECK(r.metric("rhs_one") == 1.0);
}

TEST_CASE("input validation") {
  const auto model = make_model({"ou_jump", {}, std::nullopt});
  const auto rho0 = gaussian_field(line512(), one(0.5), 0.25);
  SUBCASE("CFL refusal reports the required step") {
    try {
      solve_kernel_spde(model, line512(), rho0, sample_noise(model, TimeGrid::uniform(0.0, 0.5, 5), 1));
      FAIL("expected a CFL refusal");
    } catch (const CflError& e) {
      CHECK(e.required_dt() > 0.0);
      CHECK(e.required_dt() < 0.1);
    }
  }
  SUBCASE("initial mass must be one") {
    auto heavy = rho0;
    for (auto& v : heavy) v *= 1.1;
    CHECK_THROWS(solve_kernel_spde(model, line512(), heavy, sample_noise(model, kernel_time_grid(model, line512(), 0.0, 0.1), 1)));
  }
  SUBCASE("mass collapse raises") {
    KernelOptions opts;
    opts.mass_floor = 1.5;
    CHECK_THROWS_AS(solve_kernel_spde(model, line512(), rho0,
                                      sample_noise(model, kernel_time_grid(model, line512(), 0.0, 0.1), 1), opts),
                    InstabilityError);
  }
}

TEST_CASE("serial and parallel paths agree bit for bit") {
  set_thread_count(4);
  const auto model = make_model({"ou_jump", {}, std::nullopt});
  const auto& grid = line512();
  const auto rho0 = gaussian_field(grid, one(0.5), 0.25);
  const auto tgrid = kernel_time_grid(model, grid, 0.0, 0.2);

  const auto coeffs = sample_coefficients(model, grid, 0.0);
  std::vector<double> a(grid.size()), b(grid.size());
  fokker_planck_rhs(grid, coeffs, rho0, a, Exec::serial);
  fokker_planck_rhs(grid, coeffs, rho0, b, Exec::parallel);
  CHECK(a == b);
  stochastic_flux(grid, coeffs, rho0, one(0.01), a, Exec::serial);
  stochastic_flux(grid, coeffs, rho0, one(0.01), b, Exec::parallel);
  CHECK(a == b);

  const auto noise = sample_noise(model, tgrid, 5);
  KernelOptions serial, parallel;
  parallel.exec = Exec::parallel;
  const auto ks = solve_kernel_spde(model, grid, rho0, noise, serial);
  const auto kp = solve_kernel_spde(model, grid, rho0, noise, parallel);
  CHECK(ks.field.values == kp.field.values);

  const auto gs = check_global_invariants(ks, model, noise, registry_test_functions(), 2000, 3, Exec::serial);
  const auto gp = check_global_invariants(ks, model, noise, registry_test_functions(), 2000, 3, Exec::parallel);
  CHECK(gs.metrics == gp.metrics);

  const auto es = kernel_ensemble(model, grid, rho0, tgrid, seed_range(1, 6), Exec::serial);
  const auto ep = kernel_ensemble(model, grid, rho0, tgrid, seed_range(1, 6), Exec::parallel);
  CHECK(es.mean == ep.mean);
  CHECK(es.stddev == ep.stddev);
}

TEST_CASE("two-dimensional kernel conserves mass") {
  const auto model = make_model({"rotation2d", {{"sigma", 0.2}}, std::vector<MarkAtom>{}});
  const auto grid = SpatialGrid::square(-3.0, 3.0, 81);
  Vec mean(2);
  mean << 1.0, 0.0;
  const auto rho0 = gaussian_field(grid, mean, 0.1);
  const auto kernel = solve_kernel_spde(model, grid, rho0, sample_noise(model, kernel_time_grid(model, grid, 0.0, 0.3), 1));
  CHECK(std::abs(kernel.mass.back() - 1.0) <= 1e-2);
}

}  // TEST_SUITE
