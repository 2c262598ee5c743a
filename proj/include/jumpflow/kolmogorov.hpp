#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jumpflow/grid.hpp"
#include "jumpflow/kernel_spde.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/report.hpp"
#include "jumpflow/spatial_ops.hpp"

namespace jumpflow {

// Same model with a replaced by a - sum_j rate_j g(t, x, gamma_j).
JumpDiffusionModel compensate_drift(const JumpDiffusionModel& model);

// poisson:  sum_j rate_j [P_j p - p]
// centered: sum_j rate_j [P_j p - p - d(p g_j)], to be paired with the
//           compensated drift
enum class JumpForm { poisson, centered };
enum class TimeScheme { euler, heun };

const char* to_string(JumpForm form);
const char* to_string(TimeScheme scheme);

struct SolverOptions {
  TimeScheme scheme = TimeScheme::heun;
  JumpForm jump_form = JumpForm::poisson;  // forward only
  int steps = 0;                           // 0 picks cfl_fraction * CFL
  double cfl_fraction = 0.9;
  bool store_history = true;
  double mass_floor = 0.5;
  Exec exec = Exec::serial;
};

struct DensityField {
  GridField field;
  std::vector<double> mass;              // trapezoid mass per stored slice
  std::vector<double> boundary_loss;     // cumulative
  std::vector<double> jump_mass_change;  // cumulative
  CflLimits cfl;
  double dt = 0.0;
  int steps = 0;
};

// Explicit solve of dp/dt = -d(p a) + 1/2 dd(p b b^T) + jump term from t0 to
// T. Throws CflError when options.steps is too few.
DensityField solve_forward(const JumpDiffusionModel& model, const SpatialGrid& grid,
                           const std::vector<double>& p0, double t0, double T,
                           const SolverOptions& options = {});

// v(s, y) = E[phi(x(t_end)) | x(s) = y], from dv/ds + a.grad v + 1/2 B:hess v
// + sum_j rate_j [v(y + g_j) - v] = 0 stepped backward from phi. field.times
// ascend, so field.at(0) is v(s_start) and field.final() is phi.
struct BackwardField {
  GridField field;
  CflLimits cfl;
  double dt = 0.0;
  int steps = 0;
};

BackwardField solve_backward(const JumpDiffusionModel& model, const SpatialGrid& grid,
                             const std::vector<double>& phi, double s_start, double t_end,
                             const SolverOptions& options = {});

// Steps used when options.steps == 0.
int auto_steps(const JumpDiffusionModel& model, const SpatialGrid& grid, double t0, double T,
               double fraction);

// Bin masses of p(T) against sum_y w_y v_bin(s, y) p(s, y), with v_bin the
// backward solution from the bin's indicator. Bins are blocks of
// bin_cells nodes per axis.
VerificationReport chapman_consistency(const JumpDiffusionModel& model, const SpatialGrid& grid,
                                       const std::vector<double>& p0, double t0, double s,
                                       double T, int bin_cells, const SolverOptions& options = {});

// int v(s, y) p(s, y) dy at every shared step, for forward p from p0 at t0
// and backward v from phi at T.
VerificationReport duality(const JumpDiffusionModel& model, const SpatialGrid& grid,
                           const std::vector<double>& p0, const std::vector<double>& phi,
                           double t0, double T, const SolverOptions& options = {});

// One-dimensional histogram of terminal states.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> density;
  std::vector<double> stderr_density;
  std::size_t paths = 0;     // undiverged paths
  std::size_t diverged = 0;
  std::size_t outside = 0;   // undiverged paths landing beyond the edges
  std::vector<std::string> warnings;

  std::size_t bins() const { return counts.size(); }
  double width(std::size_t b) const { return edges[b + 1] - edges[b]; }
};

std::vector<double> uniform_edges(double lo, double hi, int bins);

using InitialSampler = std::function<Vec(std::mt19937_64&)>;

// N >= 1000 independent paths with per-path noise seeds; terminal states
// binned in path order. Warns when more than 1% of the paths diverge.
Histogram monte_carlo_density(const JumpDiffusionModel& model, const InitialSampler& init,
                              std::size_t paths, const std::vector<double>& edges, double t0,
                              double T, int steps, std::uint64_t seed,
                              Exec exec = Exec::parallel);

// Mass of the piecewise-linear interpolant of p in each histogram bin.
std::vector<double> bin_masses(const SpatialGrid& grid, const std::vector<double>& p,
                               const std::vector<double>& edges);

// sum_b |mass_pde(b) - count(b) / paths|, plus the paths that fell outside.
double histogram_l1(const Histogram& h, const SpatialGrid& grid, const std::vector<double>& p);

// L1 between the mean of M kernel solutions and the forward solution, with
// the 3 / sqrt(M) ensemble band 3 int sd(x) dx / sqrt(M).
VerificationReport expectation_link(const JumpDiffusionModel& model, const SpatialGrid& grid,
                                    const std::vector<double>& p0, double t0, double T,
                                    const std::vector<std::uint64_t>& seeds,
                                    Exec exec = Exec::parallel);

}  // namespace jumpflow
