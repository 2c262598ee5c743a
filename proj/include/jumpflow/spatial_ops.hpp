#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumpflow/grid.hpp"
#include "jumpflow/model.hpp"

namespace jumpflow {

// Model coefficients sampled at every grid node at one time.
struct NodeCoefficients {
  double t = 0.0;
  int dim = 1;
  int noise_dim = 0;
  std::vector<double> a;  // dim per node
  std::vector<double> B;  // b b^T, dim * dim per node, row-major
  std::vector<double> b;  // dim * noise_dim per node, row-major
  double max_a = 0.0;     // max |a_d| over nodes and axes
  double max_B = 0.0;     // max spectral norm of b b^T over nodes
};

NodeCoefficients sample_coefficients(const JumpDiffusionModel& model, const SpatialGrid& grid,
                                     double t, Exec exec = Exec::serial);

// Samples once for autonomous models, otherwise on every new time.
class CoefficientCache {
 public:
  CoefficientCache(const JumpDiffusionModel& model, const SpatialGrid& grid, Exec exec);
  const NodeCoefficients& at(double t);

 private:
  const JumpDiffusionModel* model_;
  SpatialGrid grid_;
  Exec exec_;
  std::optional<NodeCoefficients> cached_;
};

struct CflLimits {
  double diffusion = 0.0;  // dx^2 / (2 max |b b^T|)
  double advection = 0.0;  // dx / (2 max |a|)
  double jumps = 0.0;      // 0.1 / total_rate
  double dt = 0.0;         // min of the three
  std::string binding;     // which limit is smallest
};

// Coefficient maxima sampled at t0, the midpoint and T.
CflLimits cfl_limits(const JumpDiffusionModel& model, const SpatialGrid& grid, double t0,
                     double T);

// Uniform time grid whose step respects fraction * cfl.dt.
int cfl_steps(const CflLimits& cfl, double t0, double T, double fraction);

// out = -d_i(p a_i) + 1/2 d_i d_j(p B_ij). Upwind advective fluxes with
// face velocities averaged from the nodes, central diffusion, zero ghosts.
void fokker_planck_rhs(const SpatialGrid& grid, const NodeCoefficients& c,
                       std::span<const double> p, std::span<double> out, Exec exec);

// out = -sum_k d_i(p b_ik) dw_k, central differences, zero ghosts.
void stochastic_flux(const SpatialGrid& grid, const NodeCoefficients& c, std::span<const double> p,
                     const Vec& dw, std::span<double> out, Exec exec);

// out = a_i d_i v + 1/2 B_ij d_i d_j v. Upwind first derivatives, central
// second derivatives, zero-gradient ghosts (so constants map to zero).
void generator(const SpatialGrid& grid, const NodeCoefficients& c, std::span<const double> v,
               std::span<double> out, Exec exec);

// out_j = -sum_i d_i(p g_i) at each node for one mark, central, zero ghosts.
void jump_divergence(const SpatialGrid& grid, const JumpDiffusionModel& model, double t,
                     const Vec& mark, std::span<const double> p, std::span<double> out, Exec exec);

// rho -> rho(x^{-1}(x)) * det(I + dg/dx)^{-1} at x^{-1}(x), with x^{-1} the
// inverse jump map. Points pulled outside the grid read zero.
class PullbackMap {
 public:
  PullbackMap(const JumpDiffusionModel& model, const SpatialGrid& grid, double t, const Vec& mark);
  void apply(std::span<const double> in, std::span<double> out, Exec exec) const;
  double max_weight_error() const { return max_weight_error_; }

 private:
  std::vector<Stencil> stencils_;
  std::vector<double> weights_;
  double max_weight_error_ = 0.0;
};

// v -> v(y + g(s, y, gamma)), clamped to the boundary value outside.
class ShiftMap {
 public:
  ShiftMap(const JumpDiffusionModel& model, const SpatialGrid& grid, double t, const Vec& mark);
  void apply(std::span<const double> in, std::span<double> out, Exec exec) const;

 private:
  std::vector<Stencil> stencils_;
};

// Per-atom jump maps, built once for autonomous models.
class JumpMapCache {
 public:
  JumpMapCache(const JumpDiffusionModel& model, const SpatialGrid& grid);
  const PullbackMap& pullback(std::size_t atom, double t);
  const ShiftMap& shift(std::size_t atom, double t);

 private:
  const JumpDiffusionModel* model_;
  SpatialGrid grid_;
  std::map<std::size_t, std::pair<double, std::unique_ptr<PullbackMap>>> pull_;
  std::map<std::size_t, std::pair<double, std::unique_ptr<ShiftMap>>> shift_;
};

}  // namespace jumpflow
