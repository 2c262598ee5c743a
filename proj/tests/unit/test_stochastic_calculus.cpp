#include <cmath>
#include <random>

#include <doctest.h>

#include "jumpflow/errors.hpp"
#include "jumpflow/path.hpp"
#include "jumpflow/registry.hpp"
#include "jumpflow/stats.hpp"
#include "jumpflow/stochastic_calculus.hpp"
#include "oracles.hpp"

using namespace jumpflow;

namespace {

Vec one(double v) { return Vec::Constant(1, v); }

CandidateIntegral identity_u() {
  CandidateIntegral u;
  u.u = [](double, const Vec& x) { return x[0]; };
  u.du_dt = [](double, const Vec&) { return 0.0; };
  u.gradient = [](double, const Vec&) -> Vec { return Vec::Ones(1); };
  u.hessian = [](double, const Vec&) -> Mat { return Mat::Zero(1, 1); };
  return u;
}

GridField initial_field(const SpatialGrid& grid, const std::function<double(const Vec&)>& f) {
  GridField field;
  field.grid = grid;
  field.times = {0.0};
  field.values.push_back(grid.sample(f));
  return field;
}

}  // namespace

TEST_SUITE("stochastic_calculus") {

TEST_CASE("x-independent builder") {
  SUBCASE("u = x with constant a, b") {
    const auto model = make_additive(Vec::Constant(1, 0.5), Mat::Constant(1, 1, 0.3), {atom(0.25, 1.0)});
    const auto diff = first_integral_coeffs_xindep(identity_u(), model);
    CHECK(diff.Q(0.0, one(0.7)) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(diff.D(0.0, one(0.7))[0] == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(diff.G(0.0, one(0.7), one(0.25)) == doctest::Approx(-0.25).epsilon(1e-12));
  }
  SUBCASE("u = x^2 with a = 0, b = sigma") {
    const double sigma = 0.8;
    const auto model = make_additive(Vec::Zero(1), Mat::Constant(1, 1, sigma));
    CandidateIntegral u;
    u.u = [](double, const Vec& x) { return x[0] * x[0]; };
    u.gradient = [](double, const Vec& x) -> Vec { return 2.0 * x; };
    u.hessian = [](double, const Vec&) -> Mat { return Mat::Constant(1, 1, 2.0); };
    const auto diff = first_integral_coeffs_xindep(u, model);
    // -[0 + sigma^2 - 2 sigma^2]
    CHECK(diff.Q(0.0, one(1.1)) == doctest::Approx(sigma * sigma).epsilon(1e-10));
    CHECK(diff.D(0.0, one(1.1))[0] == doctest::Approx(-sigma * 2.2).epsilon(1e-12));
  }
  SUBCASE("state-dependent jumps are refused") {
    CHECK_THROWS_AS(first_integral_coeffs_xindep(identity_u(), make_model({"geometric", {}, std::nullopt})),
                    WrongVariantError);
  }
}

TEST_CASE("x-dependent builder") {
  SUBCASE("agrees with the x-independent builder when g ignores x") {
    const auto model = make_model({"ou_jump", {}, std::nullopt});
    CandidateIntegral u;
    u.u = [](double t, const Vec& x) { return std::sin(x[0]) + t * x[0] * x[0]; };
    const auto a = first_integral_coeffs_xindep(u, model);
    const auto b = first_integral_coeffs_xdep(u, model);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
      const Vec x = one(d(rng));
      const double t = 0.5 * (d(rng) + 3.0);
      const Vec& mark = model.marks.atoms[static_cast<std::size_t>(i) % model.marks.atoms.size()].mark;
      CHECK(std::abs(a.G(t, x, mark) - b.G(t, x, mark)) <= 1e-12);
    }
  }
  SUBCASE("g = c x") {
    const double c = 0.5;
    const auto model = make_geometric(0.0, 0.0, {atom(c, 1.0)});
    const auto diff = first_integral_coeffs_xdep(identity_u(), model);
    for (double x : {-2.0, 0.3, 1.7}) {
      CHECK(diff.G(0.0, one(x), one(c)) == doctest::Approx(x / (1.0 + c) - x).epsilon(1e-12));
    }
    CandidateIntegral log_u;
    log_u.u = [](double, const Vec& x) { return std::log(std::abs(x[0])); };
    const auto log_diff = first_integral_coeffs_xdep(log_u, model);
    for (double x : {-2.0, 0.3, 1.7}) {
      CHECK(log_diff.G(0.0, one(x), one(c)) == doctest::Approx(-std::log(1.5)).epsilon(1e-12));
    }
  }
}

TEST_CASE("evolve_field") {
  const auto grid = SpatialGrid::line(-2.0, 2.0, 41);
  const auto initial = initial_field(grid, [](const Vec& x) { return std::cos(x[0]); });
  const auto model = make_additive(Vec::Zero(1), Mat::Identity(1, 1));
  const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 1024), 8);
  SUBCASE("zero coefficients keep the field") {
    const auto field = evolve_field(initial, zero_differential(1, 1), model.marks, noise);
    CHECK(field.final() == initial.values[0]);
  }
  SUBCASE("Q = 1 adds t") {
    auto diff = zero_differential(1, 1);
    diff.Q = [](double, const Vec&) { return 1.0; };
    const auto field = evolve_field(initial, diff, model.marks, noise);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      CHECK(field.final()[j] == doctest::Approx(initial.values[0][j] + 1.0).epsilon(1e-13));
    }
    const auto zero = evolve_field(initial_field(grid, [](const Vec&) { return 0.0; }), diff, model.marks, noise);
    for (double v : zero.final()) CHECK(v == 1.0);
  }
  SUBCASE("D = 1 adds the Wiener path") {
    auto diff = zero_differential(1, 1);
    diff.D = [](double, const Vec&) -> Vec { return Vec::Ones(1); };
    const auto field = evolve_field(initial, diff, model.marks, noise);
    std::vector<double> expected = initial.values[0];
    for (std::size_t i = 0; i < noise.steps(); ++i) {
      for (auto& v : expected) v += noise.increment(i)[0];
      CHECK(field.at(i + 1) == expected);
    }
  }
  SUBCASE("non-finite values raise") {
    auto diff = zero_differential(1, 1);
    diff.Q = [](double, const Vec&) { return std::numeric_limits<double>::infinity(); };
    CHECK_THROWS_AS(evolve_field(initial, diff, model.marks, noise), DivergenceError);
  }
}

TEST_CASE("Ito-Wentzell residual") {
  SUBCASE("F = x on a jump-diffusion") {
    const auto model = make_model({"geometric", {}, std::nullopt});
    const auto grid = SpatialGrid::line(-4.0, 6.0, 401);
    const auto initial = initial_field(grid, [](const Vec& x) { return x[0]; });
    const auto diff = zero_differential(1, 1);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 200), seed);
      const auto r = ito_wentzell_residual(diff, evolve_field(initial, diff, model.marks, noise), model,
                                           simulate_path(model, one(1.0), noise), noise);
      CHECK(r.metric("max_residual_cont") <= 1e-12);
      CHECK(r.metric("max_residual_jump") <= 1e-12);
    }
  }
  SUBCASE("Q = 1 on a static model") {
    const auto model = make_additive(Vec::Zero(1), Mat::Zero(1, 1));
    const auto grid = SpatialGrid::line(-2.0, 2.0, 81);
    auto diff = zero_differential(1, 1);
    diff.Q = [](double, const Vec&) { return 1.0; };
    const auto initial = initial_field(grid, [](const Vec& x) { return std::sin(x[0]); });
    const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 100), 1);
    const auto r = ito_wentzell_residual(diff, evolve_field(initial, diff, model.marks, noise), model,
                                         simulate_path(model, one(0.2), noise), noise);
    CHECK(r.metric("max_residual_cont") <= 1e-12);
  }
  SUBCASE("D = 1 under dx = dw converges") {
    const auto model = make_additive(Vec::Zero(1), Mat::Identity(1, 1));
    const auto grid = SpatialGrid::line(-8.0, 8.0, 2049);
    auto diff = zero_differential(1, 1);
    diff.D = [](double, const Vec&) -> Vec { return Vec::Ones(1); };
    const auto initial = initial_field(grid, [](const Vec& x) { return std::sin(x[0]); });
    std::vector<double> dts, errs;
    for (int steps : {100, 200, 400}) {
      std::vector<double> per_seed;
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, steps), seed);
        per_seed.push_back(ito_wentzell_residual(diff, evolve_field(initial, diff, model.marks, noise), model,
                                                 simulate_path(model, one(0.0), noise), noise)
                               .metric("rms_residual_cont"));
      }
      dts.push_back(1.0 / steps);
      errs.push_back(rms(per_seed));
    }
    CHECK(oracle::slope(dts, errs) >= 0.45);
  }
  SUBCASE("a field transported by a deterministic flow") {
    // a = alpha x, F(t, x) = x e^{-alpha t}, Q = -alpha x e^{-alpha t}
    const double alpha = 0.7;
    const auto model = make_geometric(alpha, 0.0);
    const auto grid = SpatialGrid::line(-1.0, 4.0, 201);
    auto diff = zero_differential(1, 1);
    diff.Q = [alpha](double t, const Vec& x) { return -alpha * x[0] * std::exp(-alpha * t); };
    const auto initial = initial_field(grid, [](const Vec& x) { return x[0]; });
    std::vector<double> dts, totals;
    for (int steps : {50, 100, 200, 400}) {
      const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, steps), 1);
      const auto r = ito_wentzell_residual(diff, evolve_field(initial, diff, model.marks, noise), model,
                                           simulate_path(model, one(1.0), noise), noise);
      dts.push_back(1.0 / steps);
      totals.push_back(r.metric("total_abs_residual"));
      CHECK(r.metric("max_residual_cont") <= 10.0 / (steps * steps));
    }
    CHECK(oracle::slope(dts, totals) >= 0.9);
  }
  SUBCASE("paths leaving the grid are excluded with a warning") {
    const auto model = make_additive(Vec::Constant(1, 5.0), Mat::Zero(1, 1));
    const auto grid = SpatialGrid::line(-1.0, 1.0, 41);
    const auto diff = zero_differential(1, 1);
    const auto initial = initial_field(grid, [](const Vec& x) { return x[0]; });
    const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 50), 1);
    const auto r = ito_wentzell_residual(diff, evolve_field(initial, diff, model.marks, noise), model,
                                         simulate_path(model, one(0.0), noise), noise);
    CHECK(r.metric("steps_excluded") > 0.0);
    CHECK(!r.warnings.empty());
  }
}

TEST_CASE("first-integral verification") {
  const auto seeds = seed_range(1000, 50);
  SUBCASE("additive with noise-aware candidate") {
    const ModelSpec spec{"additive", {}, std::vector<MarkAtom>{atom(0.4, 1.0), atom(-0.3, 0.5)}};
    const auto report = verify_first_integral(registry_candidate(spec), make_model(spec), one(0.7), seeds,
                                              TimeGrid::uniform(0.0, 1.0, 500));
    CHECK(report.metric("max_drift") <= 1e-10);
  }
  SUBCASE("pure jump bookkeeping") {
    const ModelSpec spec{"pure_jump", {}, std::nullopt};
    const auto report = verify_first_integral(registry_candidate(spec), make_model(spec), one(0.5), seeds,
                                              TimeGrid::uniform(0.0, 1.0, 100));
    CHECK(report.metric("max_drift") == 0.0);
  }
  SUBCASE("deterministic rotation") {
    const ModelSpec spec{"rotation2d", {{"omega", 0.1}}, std::vector<MarkAtom>{}};
    FirstIntegralOptions opts;
    opts.refinement_levels = 2;
    Vec x0(2);
    x0 << 1.0, 0.0;
    const auto report = verify_first_integral(registry_candidate(spec), make_model(spec), x0, seed_range(1, 2),
                                              TimeGrid::uniform(0.0, 0.5, 1250), opts);
    CHECK(report.metric("max_drift") <= 1e-6);
    CHECK(report.metric("fitted_order") >= 0.9);
    CHECK(report.metric("fitted_order") <= 1.1);
  }
  SUBCASE("non-integral is detected") {
    const ModelSpec spec{"geometric", {}, std::nullopt};
    const auto grid = TimeGrid::uniform(0.0, 1.0, 100);
    const auto model = make_model(spec);
    const double integral = verify_first_integral(registry_candidate(spec), model, one(1.0), seeds, grid).metric("rms_drift");
    const double control = verify_first_integral(coordinate_candidate(), model, one(1.0), seeds, grid).metric("rms_drift");
    CHECK(control > 10.0 * integral);
  }
  SUBCASE("divergent seeds are skipped and counted") {
    auto model = make_geometric(0.0, 0.0);
    model.drift = [](double, const Vec& x) -> Vec { return x.array().square().matrix() * 1e300; };
    const auto report = verify_first_integral(coordinate_candidate(), model, one(10.0), seed_range(1, 3),
                                              TimeGrid::uniform(0.0, 1.0, 10));
    CHECK(report.metric("divergent_seeds") == 3.0);
    CHECK(!report.warnings.empty());
  }
  SUBCASE("grid-field candidate") {
    // u = x - sum of jumps on pure_jump, represented by an evolved field with G = -gamma
    const ModelSpec spec{"pure_jump", {}, std::nullopt};
    const auto model = make_model(spec);
    const auto grid = SpatialGrid::line(-6.0, 8.0, 141);
    auto diff = zero_differential(1, 1);
    diff.G = [](double, const Vec&, const Vec& mark) { return -mark[0]; };
    const auto initial = initial_field(grid, [](const Vec& x) { return x[0]; });
    const auto report = verify_first_integral_field(
        [&](const NoiseRealization& noise) { return evolve_field(initial, diff, model.marks, noise); }, model,
        one(0.5), seed_range(1, 20), TimeGrid::uniform(0.0, 1.0, 50));
    CHECK(report.metric("max_drift") <= 1e-12);
  }
}

}  // TEST_SUITE
