#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jumpflow/model.hpp"
#include "jumpflow/types.hpp"

namespace jumpflow {

struct TimeGrid {
  double t0 = 0.0;
  double T = 1.0;
  int base_steps = 1;
  std::vector<double> nodes;  // strictly increasing, t0 first, T last

  static TimeGrid uniform(double t0, double T, int steps);

  double nominal_dt() const { return (T - t0) / base_steps; }
  double max_step() const;
  std::size_t steps() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

struct JumpEvent {
  double time = 0.0;
  std::size_t atom = 0;
  std::size_t node = 0;  // grid node carrying this jump
};

// One sampled driving record: Wiener increments on the node grid plus the
// Poisson jump events, each of which sits exactly on a node.
struct NoiseRealization {
  TimeGrid grid;
  Mat wiener_increments;  // m x steps
  Mat wiener_path;        // m x nodes, cumulative, column 0 is zero
  std::vector<JumpEvent> jumps;
  std::uint64_t seed = 0;
  int refinement = 0;  // number of Brownian-bridge halvings applied

  std::size_t steps() const { return grid.steps(); }
  double dt(std::size_t i) const { return grid.nodes[i + 1] - grid.nodes[i]; }
  auto increment(std::size_t i) const { return wiener_increments.col(static_cast<Eigen::Index>(i)); }

  // Jumps applied at node i (empty for most nodes).
  std::span<const JumpEvent> jumps_at(std::size_t node) const;
  bool is_jump_node(std::size_t node) const { return !jumps_at(node).empty(); }

  Vec wiener_at_node(std::size_t node) const { return wiener_path.col(static_cast<Eigen::Index>(node)); }
  // Exact at nodes, linear in between.
  Vec wiener_at(double t) const;
  std::size_t node_index(double t) const;  // largest node <= t
};

// Exponential(total_rate) interarrivals, atom j with probability
// rate_j / total_rate, jump times inserted as nodes, then N(0, dt I)
// increments on the final spacing. Same (model, grid, seed) -> same bits.
NoiseRealization sample_noise(const JumpDiffusionModel& model, const TimeGrid& grid,
                              std::uint64_t seed);

// Halves every interval by Brownian-bridge subdivision. The coarse
// realization is recovered exactly by summing pairs of fine increments;
// jump times and marks are untouched.
NoiseRealization refine_noise(const NoiseRealization& coarse);

// Applies refine_noise `levels` times.
NoiseRealization refine_noise(const NoiseRealization& coarse, int levels);

}  // namespace jumpflow
