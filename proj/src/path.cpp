#include "jumpflow/path.hpp"

#include <cmath>

#include "jumpflow/errors.hpp"

namespace jumpflow {

const Vec& Trajectory::left_limit(std::size_t i) const {
  auto it = left_limits.find(i);
  return it == left_limits.end() ? states[i] : it->second;
}

namespace {

void check_finite(const Vec& x, std::size_t step) {
  if (!x.allFinite()) throw DivergenceError("non-finite state in simulate_path", step);
}

// Continuous Euler step followed by any jumps at node i + 1. `on_jump`
// receives the left limit before it is overwritten.
template <class OnJump>
void advance(const JumpDiffusionModel& model, const NoiseRealization& noise, std::size_t i,
             Vec& x, OnJump&& on_jump) {
  const double t = noise.grid.nodes[i];
  Vec next = x + model.drift(t, x) * noise.dt(i);
  if (model.noise_dim > 0) next.noalias() += model.diffusion(t, x) * noise.increment(i);
  x = std::move(next);
  check_finite(x, i + 1);
  const auto jumps = noise.jumps_at(i + 1);
  if (jumps.empty()) return;
  on_jump(x);
  for (const auto& jump : jumps) {
    x += model.jump(jump.time, x, model.marks.atoms[jump.atom].mark);
  }
  check_finite(x, i + 1);
}

}  // namespace

Trajectory simulate_path(const JumpDiffusionModel& model, const Vec& x0,
                         const NoiseRealization& noise) {
  if (x0.size() != model.dim) throw InvalidModelError("x0 has wrong dimension");
  check_finite(x0, 0);
  Trajectory traj;
  const std::size_t nodes = noise.grid.nodes.size();
  traj.times = noise.grid.nodes;
  traj.states.reserve(nodes);
  traj.states.push_back(x0);
  Vec x = x0;
  for (std::size_t i = 0; i + 1 < nodes; ++i) {
    advance(model, noise, i, x, [&](const Vec& pre) { traj.left_limits.emplace(i + 1, pre); });
    traj.states.push_back(x);
  }
  return traj;
}

Vec simulate_terminal(const JumpDiffusionModel& model, const Vec& x0,
                      const NoiseRealization& noise) {
  if (x0.size() != model.dim) throw InvalidModelError("x0 has wrong dimension");
  Vec x = x0;
  for (std::size_t i = 0; i + 1 < noise.grid.nodes.size(); ++i) {
    advance(model, noise, i, x, [](const Vec&) {});
  }
  return x;
}

}  // namespace jumpflow
