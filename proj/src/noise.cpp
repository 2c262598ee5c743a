#include "jumpflow/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "jumpflow/errors.hpp"

namespace jumpflow {

namespace {

enum Stream : std::uint64_t { kJumps = 1, kWiener = 2, kBridge = 3 };

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t level = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(level)};
  return std::mt19937_64(seq);
}

void fill_path(NoiseRealization& noise) {
  const auto m = noise.wiener_increments.rows();
  const auto steps = noise.wiener_increments.cols();
  noise.wiener_path = Mat::Zero(m, steps + 1);
  for (Eigen::Index i = 0; i < steps; ++i) {
    noise.wiener_path.col(i + 1) = noise.wiener_path.col(i) + noise.wiener_increments.col(i);
  }
}

}  // namespace

TimeGrid TimeGrid::uniform(double t0, double T, int steps) {
  if (!(T > t0) || steps < 1) throw Error("time grid needs T > t0 and at least one step");
  TimeGrid grid;
  grid.t0 = t0;
  grid.T = T;
  grid.base_steps = steps;
  grid.nodes.resize(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) grid.nodes[i] = t0 + (T - t0) * (static_cast<double>(i) / steps);
  grid.nodes.back() = T;
  return grid;
}

double TimeGrid::max_step() const {
  double h = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) h = std::max(h, nodes[i + 1] - nodes[i]);
  return h;
}

std::span<const JumpEvent> NoiseRealization::jumps_at(std::size_t node) const {
  auto lo = std::lower_bound(jumps.begin(), jumps.end(), node,
                             [](const JumpEvent& e, std::size_t n) { return e.node < n; });
  auto hi = lo;
  while (hi != jumps.end() && hi->node == node) ++hi;
  return {lo, hi};
}

std::size_t NoiseRealization::node_index(double t) const {
  const auto& nodes = grid.nodes;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
  if (it == nodes.begin()) return 0;
  return static_cast<std::size_t>(std::distance(nodes.begin(), it) - 1);
}

Vec NoiseRealization::wiener_at(double t) const {
  const std::size_t i = node_index(t);
  if (i + 1 >= grid.nodes.size() || grid.nodes[i] == t) return wiener_at_node(i);
  const double w = (t - grid.nodes[i]) / dt(i);
  return wiener_at_node(i) + w * increment(i);
}

NoiseRealization sample_noise(const JumpDiffusionModel& model, const TimeGrid& grid,
                              std::uint64_t seed) {
  validate_marks(model.marks);
  if (grid.nodes.size() < 2) throw Error("time grid has no steps");

  NoiseRealization noise;
  noise.seed = seed;

  // Jump times by exact exponential interarrivals on (t0, T].
  std::vector<std::pair<double, std::size_t>> events;
  if (model.has_jumps()) {
    auto rng = make_engine(seed, kJumps);
    const double total = model.marks.total_rate();
    std::exponential_distribution<double> interarrival(total);
    std::uniform_real_distribution<double> pick(0.0, total);
    double t = grid.t0;
    for (;;) {
      t += interarrival(rng);
      if (t > grid.T) break;
      const double u = pick(rng);
      double cum = 0.0;
      std::size_t atom = model.marks.atoms.size() - 1;
      for (std::size_t j = 0; j < model.marks.atoms.size(); ++j) {
        cum += model.marks.atoms[j].rate;
        if (u < cum) {
          atom = j;
          break;
        }
      }
      events.emplace_back(t, atom);
    }
  }

  // Merge jump times into the base nodes.
  const double snap = 1e-12 * (grid.T - grid.t0);
  std::vector<double> nodes;
  nodes.reserve(grid.nodes.size() + events.size());
  std::size_t e = 0;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const double node = grid.nodes[i];
    while (e < events.size() && events[e].first < node - snap) {
      if (nodes.empty() || events[e].first > nodes.back()) nodes.push_back(events[e].first);
      noise.jumps.push_back({events[e].first, events[e].second, nodes.size() - 1});
      ++e;
    }
    nodes.push_back(node);
    while (e < events.size() && events[e].first <= node + snap) {
      noise.jumps.push_back({events[e].first, events[e].second, nodes.size() - 1});
      ++e;
    }
  }
  noise.grid = grid;
  noise.grid.nodes = std::move(nodes);

  auto rng = make_engine(seed, kWiener);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t steps = noise.grid.steps();
  noise.wiener_increments.resize(model.noise_dim, static_cast<Eigen::Index>(steps));
  for (std::size_t i = 0; i < steps; ++i) {
    const double scale = std::sqrt(noise.dt(i));
    for (int k = 0; k < model.noise_dim; ++k) noise.wiener_increments(k, i) = scale * normal(rng);
  }
  fill_path(noise);
  return noise;
}

NoiseRealization refine_noise(const NoiseRealization& coarse) {
  NoiseRealization fine;
  fine.seed = coarse.seed;
  fine.refinement = coarse.refinement + 1;
  fine.grid = coarse.grid;
  fine.grid.base_steps = coarse.grid.base_steps * 2;

  const std::size_t steps = coarse.steps();
  const auto m = coarse.wiener_increments.rows();
  fine.grid.nodes.resize(2 * steps + 1);
  fine.wiener_increments.resize(m, static_cast<Eigen::Index>(2 * steps));

  auto rng = make_engine(coarse.seed, kBridge, static_cast<std::uint64_t>(fine.refinement));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < steps; ++i) {
    const double a = coarse.grid.nodes[i];
    const double b = coarse.grid.nodes[i + 1];
    const double h = b - a;
    fine.grid.nodes[2 * i] = a;
    fine.grid.nodes[2 * i + 1] = a + 0.5 * h;
    const double sd = std::sqrt(0.25 * h);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double total = coarse.wiener_increments(k, i);
      const double first = 0.5 * total + sd * normal(rng);
      fine.wiener_increments(k, 2 * i) = first;
      fine.wiener_increments(k, 2 * i + 1) = total - first;
    }
  }
  fine.grid.nodes.back() = coarse.grid.nodes.back();
  fine.jumps = coarse.jumps;
  for (auto& jump : fine.jumps) jump.node *= 2;
  fill_path(fine);
  return fine;
}

NoiseRealization refine_noise(const NoiseRealization& coarse, int levels) {
  NoiseRealization out = coarse;
  for (int l = 0; l < levels; ++l) out = refine_noise(out);
  return out;
}

}  // namespace jumpflow
