#pragma once

#include <map>
#include <ostream>
#include <vector>

#include "jumpflow/model.hpp"
#include "jumpflow/noise.hpp"

namespace jumpflow {

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;             // post-jump value at jump nodes
  std::map<std::size_t, Vec> left_limits;  // node -> pre-jump state

  std::size_t size() const { return states.size(); }
  bool is_jump_node(std::size_t i) const { return left_limits.count(i) != 0; }
  const Vec& left_limit(std::size_t i) const;  // states[i] when no jump
};

// Euler-Maruyama between nodes; at a jump node the continuous step is taken
// first, its value recorded as the left limit, then g(tau, x-, gamma) added.
// Throws DivergenceError on a non-finite state.
Trajectory simulate_path(const JumpDiffusionModel& model, const Vec& x0,
                         const NoiseRealization& noise);

// Terminal state only; same arithmetic as simulate_path without storage.
Vec simulate_terminal(const JumpDiffusionModel& model, const Vec& x0,
                      const NoiseRealization& noise);

}  // namespace jumpflow
