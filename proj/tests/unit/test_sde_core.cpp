#include <cmath>
#include <random>

#include <doctest.h>

#include "jumpflow/errors.hpp"
#include "jumpflow/jacobian.hpp"
#include "jumpflow/noise.hpp"
#include "jumpflow/path.hpp"
#include "jumpflow/registry.hpp"
#include "oracles.hpp"

using namespace jumpflow;

namespace {

JumpDiffusionModel scalar_model(DriftFn a, DiffusionFn b, JumpFn g, std::vector<MarkAtom> atoms) {
  JumpDiffusionModel m;
  m.name = "custom";
  m.dim = 1;
  m.noise_dim = 1;
  m.drift = std::move(a);
  m.diffusion = std::move(b);
  m.jump = std::move(g);
  m.marks.atoms = std::move(atoms);
  return m;
}

Vec one(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_SUITE("sde_core") {

TEST_CASE("mark measure validation") {
  MarkMeasure bad;
  bad.atoms = {atom(0.1, 0.0)};
  CHECK_THROWS_AS(validate_marks(bad), InvalidModelError);
  bad.atoms = {atom(0.1, -1.0)};
  CHECK_THROWS_AS(validate_marks(bad), InvalidModelError);
  MarkMeasure good;
  good.atoms = {atom(0.1, 0.25), atom(0.2, 0.5)};
  CHECK_NOTHROW(validate_marks(good));
  CHECK(good.total_rate() == 0.75);
  CHECK_NOTHROW(validate_marks(MarkMeasure{}));
}

TEST_CASE("registry rejects unknown parameters") {
  CHECK_THROWS_AS(make_model({"ou_jump", {{"kappa", 1.0}}, std::nullopt}), InvalidModelError);
  CHECK_THROWS_AS(make_model({"nope", {}, std::nullopt}), InvalidModelError);
  CHECK_THROWS_AS(make_geometric(0.1, 0.1, {atom(-1.5, 1.0)}), InvalidModelError);
}

TEST_CASE("empty atom list gives Wiener increments only") {
  const auto model = make_ou_jump(1.0, 0.5);
  const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 100), 3);
  CHECK(noise.jumps.empty());
  CHECK(noise.steps() == 100);
  CHECK(noise.wiener_increments.cols() == 100);
}

TEST_CASE("mean jump count matches the Poisson rate") {
  const auto model = make_pure_jump({atom(1.0, 1.0)});
  const auto grid = TimeGrid::uniform(0.0, 1.0, 10);
  double total = 0.0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) total += static_cast<double>(sample_noise(model, grid, s).jumps.size());
  CHECK(std::abs(total / seeds - 1.0) <= 0.05);
}

TEST_CASE("noise is a deterministic function of the seed") {
  const auto model = make_model({"ou_jump", {}, std::nullopt});
  const auto grid = TimeGrid::uniform(0.0, 1.0, 200);
  const auto a = sample_noise(model, grid, 42);
  const auto b = sample_noise(model, grid, 42);
  CHECK(a.grid.nodes == b.grid.nodes);
  CHECK(a.wiener_increments == b.wiener_increments);
  REQUIRE(a.jumps.size() == b.jumps.size());
  for (std::size_t i = 0; i < a.jumps.size(); ++i) {
    CHECK(a.jumps[i].time == b.jumps[i].time);
    CHECK(a.jumps[i].atom == b.jumps[i].atom);
    CHECK(a.jumps[i].node == b.jumps[i].node);
  }
  const auto pa = simulate_path(model, one(0.3), a);
  const auto pb = simulate_path(model, one(0.3), b);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa.states[i] == pb.states[i]);
}

TEST_CASE("jump times are grid nodes inside (t0, T]") {
  const auto model = make_model({"ou_jump", {}, std::nullopt});
  const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 2.0, 50), 9);
  REQUIRE(!noise.jumps.empty());
  double last = 0.0;
  for (const auto& e : noise.jumps) {
    CHECK(e.time > 0.0);
    CHECK(e.time <= 2.0);
    CHECK(e.time >= last);
    CHECK(noise.grid.nodes[e.node] == e.time);
    last = e.time;
  }
  for (std::size_t i = 1; i < noise.grid.nodes.size(); ++i) CHECK(noise.grid.nodes[i] > noise.grid.nodes[i - 1]);
}

TEST_CASE("bridge refinement preserves the coarse increments and jumps") {
  const auto model = make_model({"ou_jump", {}, std::nullopt});
  const auto coarse = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 20), 4);
  const auto fine = refine_noise(coarse);
  CHECK(fine.steps() == 2 * coarse.steps());
  for (std::size_t i = 0; i < coarse.steps(); ++i) {
    CHECK(fine.increment(2 * i)[0] + fine.increment(2 * i + 1)[0] == doctest::Approx(coarse.increment(i)[0]).epsilon(1e-12));
  }
  REQUIRE(fine.jumps.size() == coarse.jumps.size());
  for (std::size_t i = 0; i < fine.jumps.size(); ++i) CHECK(fine.jumps[i].time == coarse.jumps[i].time);
}

TEST_CASE("trivial trajectories") {
  const auto grid = TimeGrid::uniform(0.0, 1.0, 1024);
  SUBCASE("a = b = 0 keeps the start") {
    const auto model = make_additive(Vec::Zero(1), Mat::Zero(1, 1));
    const auto traj = simulate_path(model, one(1.0), sample_noise(model, grid, 1));
    for (const auto& x : traj.states) CHECK(x[0] == 1.0);
  }
  SUBCASE("constant drift is integrated exactly") {
    const auto model = make_additive(Vec::Ones(1), Mat::Zero(1, 1));
    const auto traj = simulate_path(model, one(0.0), sample_noise(model, grid, 1));
    CHECK(traj.states.back()[0] == 1.0);
  }
  SUBCASE("a = 0, b = 1 reproduces the Wiener prefix sums") {
    const auto model = make_additive(Vec::Zero(1), Mat::Identity(1, 1));
    const auto noise = sample_noise(model, grid, 5);
    const auto traj = simulate_path(model, one(0.0), noise);
    double w = 0.0;
    CHECK(traj.states[0][0] == 0.0);
    for (std::size_t i = 0; i < noise.steps(); ++i) {
      w += noise.increment(i)[0];
      CHECK(traj.states[i + 1][0] == w);
    }
  }
}

TEST_CASE("post-jump state equals left limit plus g exactly") {
  const auto model = make_model({"geometric", {}, std::nullopt});
  const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 3.0, 300), 17);
  const auto traj = simulate_path(model, one(1.0), noise);
  REQUIRE(!noise.jumps.empty());
  for (const auto& e : noise.jumps) {
    const Vec& pre = traj.left_limit(e.node);
    if (noise.jumps_at(e.node).size() != 1) continue;
    CHECK(traj.states[e.node] == pre + model.jump(e.time, pre, model.marks.atoms[e.atom].mark));
  }
}

TEST_CASE("divergent state raises with the step") {
  const auto model = scalar_model([](double, const Vec& x) -> Vec { return x.array().square().matrix() * 1e300; },
                                  [](double, const Vec&) -> Mat { return Mat::Zero(1, 1); },
                                  [](double, const Vec&, const Vec&) -> Vec { return Vec::Zero(1); }, {});
  CHECK_THROWS_AS(simulate_path(model, one(10.0), sample_noise(model, TimeGrid::uniform(0.0, 1.0, 10), 1)),
                  DivergenceError);
}

TEST_CASE("inverse jump map") {
  SUBCASE("g = c x") {
    const auto model = make_geometric(0.0, 0.0, {atom(0.5, 1.0)});
    CHECK(inverse_jump_map(model, 0.0, one(3.0), one(0.5))[0] == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("g = 0.1 sin x") {
    auto model = scalar_model([](double, const Vec&) -> Vec { return Vec::Zero(1); },
                              [](double, const Vec&) -> Mat { return Mat::Zero(1, 1); },
                              [](double, const Vec& x, const Vec&) -> Vec { return 0.1 * x.array().sin().matrix(); },
                              {atom(1.0, 1.0)});
    const double x = inverse_jump_map(model, 0.0, one(1.0), one(1.0))[0];
    CHECK(std::abs(x + 0.1 * std::sin(x) - 1.0) <= 1e-12);
    const double root = oracle::bisect([](double z) { return z + 0.1 * std::sin(z) - 1.0; }, 0.0, 2.0);
    CHECK(x == doctest::Approx(root).epsilon(1e-12));
  }
  SUBCASE("round trip on random probes") {
    const auto model = make_model({"geometric", {}, std::nullopt});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> z(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
      const Vec x = one(z(rng));
      const Vec& mark = model.marks.atoms[static_cast<std::size_t>(i) % model.marks.atoms.size()].mark;
      const Vec y = x + model.jump(0.0, x, mark);
      CHECK((inverse_jump_map(model, 0.0, y, mark) - x).norm() <= 1e-10 * (1.0 + x.norm()));
    }
  }
  SUBCASE("singular map") {
    auto model = scalar_model([](double, const Vec&) -> Vec { return Vec::Zero(1); },
                              [](double, const Vec&) -> Mat { return Mat::Zero(1, 1); },
                              [](double, const Vec& x, const Vec&) -> Vec { return -x; }, {atom(1.0, 1.0)});
    CHECK_THROWS(inverse_jump_map(model, 0.0, one(1.0), one(1.0)));
  }
}

TEST_CASE("jump Jacobian determinant") {
  CHECK(jump_jacobian_det(make_ou_jump(1.0, 0.5, {atom(0.3, 1.0)}), 0.0, one(0.4), one(0.3)) == doctest::Approx(1.0));
  CHECK(jump_jacobian_det(make_geometric(0.0, 0.0, {atom(0.5, 1.0)}), 0.0, one(2.0), one(0.5)) == doctest::Approx(1.5));

  JumpDiffusionModel linear2d;
  linear2d.dim = 2;
  linear2d.noise_dim = 1;
  Mat C(2, 2);
  C << 0.1, 0.2, 0.0, 0.3;
  linear2d.drift = [](double, const Vec&) -> Vec { return Vec::Zero(2); };
  linear2d.diffusion = [](double, const Vec&) -> Mat { return Mat::Zero(2, 1); };
  linear2d.jump = [C](double, const Vec& x, const Vec&) -> Vec { return C * x; };
  linear2d.marks.atoms = {atom(1.0, 1.0)};
  const double expected = (1.0 + 0.1) * (1.0 + 0.3) - 0.2 * 0.0;
  Vec x(2);
  x << 0.7, -0.2;
  CHECK(jump_jacobian_det(linear2d, 0.0, x, one(1.0)) == doctest::Approx(expected).epsilon(1e-8));
  CHECK(expected == doctest::Approx(1.43));
}

TEST_CASE("K coefficient") {
  CHECK(k_coefficient(make_additive(Vec::Constant(1, 0.3), Mat::Constant(1, 1, 0.7)), 0.0, one(0.2)) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(k_coefficient(make_geometric(0.4, 0.0), 0.0, one(1.3)) == doctest::Approx(0.4).epsilon(1e-8));
  CHECK(std::abs(k_coefficient(make_geometric(0.0, 0.6), 0.0, one(1.3))) <= 1e-8);
}

TEST_CASE("Jacobian series") {
  SUBCASE("constant coefficients give J = 1") {
    const auto model = make_additive(Vec::Constant(1, 0.5), Mat::Constant(1, 1, 0.3), {atom(0.2, 2.0)});
    const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 100), 2);
    const auto pair = evolve_jacobian(model, simulate_path(model, one(0.0), noise), noise);
    for (double j : pair.integrated.values) CHECK(j == doctest::Approx(1.0).epsilon(1e-14));
    for (double j : pair.closed_form.values) CHECK(j == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("linear drift") {
    const auto model = make_geometric(0.5, 0.0);
    const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 1000), 1);
    const auto pair = evolve_jacobian(model, simulate_path(model, one(1.0), noise), noise);
    CHECK(std::abs(pair.integrated.values.back() - std::exp(0.5)) <= 1e-3);
    CHECK(pair.integrated.values.front() == 1.0);
  }
  SUBCASE("a single multiplicative jump") {
    const auto model = make_geometric(0.0, 0.0, {atom(0.5, 1.0)});
    for (std::uint64_t seed = 1;; ++seed) {
      const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 100), seed);
      if (noise.jumps.size() != 1) continue;
      const auto pair = evolve_jacobian(model, simulate_path(model, one(1.0), noise), noise);
      CHECK(pair.integrated.values.back() == 1.5);
      break;
    }
  }
  SUBCASE("both evaluations agree on every registry model") {
    for (const auto& key : registry_keys()) {
      ModelSpec spec{key, {}, std::nullopt};
      if (key == "rotation2d") spec.params["sigma"] = 0.2;
      const auto model = make_model(spec);
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto noise = sample_noise(model, TimeGrid::uniform(0.0, 1.0, 300), seed);
        const auto pair = evolve_jacobian(model, simulate_path(model, Vec::Constant(model.dim, 0.8), noise), noise);
        CHECK(pair.max_relative_gap() <= 1e-8);
        for (double j : pair.integrated.values) CHECK(j > 0.0);
      }
    }
  }
  SUBCASE("non-positive jump determinant is rejected") {
    const auto model = make_geometric(0.0, 0.0, {atom(-0.999, 5.0)});
    auto sign_flip = model;
    sign_flip.jump = [](double, const Vec& x, const Vec&) -> Vec { return -2.0 * x; };
    sign_flip.jump_jacobian = [](double, const Vec&, const Vec&) -> Mat { return Mat::Constant(1, 1, -2.0); };
    for (std::uint64_t seed = 1;; ++seed) {
      const auto noise = sample_noise(sign_flip, TimeGrid::uniform(0.0, 1.0, 10), seed);
      if (noise.jumps.empty()) continue;
      CHECK_THROWS_AS(evolve_jacobian(sign_flip, simulate_path(sign_flip, one(1.0), noise), noise),
                      InvariantViolationError);
      break;
    }
  }
}

TEST_CASE("geometric paths converge strongly to the closed form") {
  const double alpha = 0.1, sigma = 0.3;
  const auto model = make_model({"geometric", {{"alpha", alpha}, {"sigma", sigma}}, std::nullopt});
  std::vector<double> dts, errs;
  for (int level = 0; level <= 2; ++level) {
    double sq = 0.0;
    const int seeds = 200;
    double dt = 0.0;
    for (int s = 0; s < seeds; ++s) {
      const auto noise = refine_noise(sample_noise(model, TimeGrid::uniform(0.0, 1.0, 16), 100 + s), 2 * level);
      dt = 1.0 / (16 << (2 * level));
      const double xt = simulate_terminal(model, one(1.0), noise)[0];
      double exact = std::exp((alpha - 0.5 * sigma * sigma) + sigma * noise.wiener_path(0, noise.wiener_path.cols() - 1));
      for (const auto& e : noise.jumps) exact *= 1.0 + model.marks.atoms[e.atom].mark[0];
      sq += (xt - exact) * (xt - exact);
    }
    dts.push_back(dt);
    errs.push_back(std::sqrt(sq / seeds));
  }
  CHECK(oracle::slope(dts, errs) >= 0.45);
}

}  // TEST_SUITE
