#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "jumpflow/grid.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/noise.hpp"
#include "jumpflow/path.hpp"
#include "jumpflow/registry.hpp"
#include "jumpflow/report.hpp"

namespace jumpflow {

// Coefficients of d_t F = Q dt + D_k dw_k + int G nu(dt, dgamma).
struct FieldDifferential {
  int dim = 1;
  int noise_dim = 1;
  std::function<double(double t, const Vec& x)> Q;
  std::function<Vec(double t, const Vec& x)> D;  // one entry per Wiener component
  std::function<double(double t, const Vec& x, const Vec& mark)> G;
  // (i, k) = dD_k / dx_i; central differences when absent
  std::function<Mat(double t, const Vec& x)> D_gradient;
};

FieldDifferential zero_differential(int dim, int noise_dim);
Mat differential_gradient(const FieldDifferential& diff, double t, const Vec& x);

// Candidate first integral u(t, x). Derivatives fall back to central
// differences when absent.
struct CandidateIntegral {
  std::function<double(double t, const Vec& x)> u;
  std::function<double(double t, const Vec& x)> du_dt;
  std::function<Vec(double t, const Vec& x)> gradient;
  std::function<Mat(double t, const Vec& x)> hessian;
};

Vec candidate_gradient(const CandidateIntegral& u, double t, const Vec& x);
Mat candidate_hessian(const CandidateIntegral& u, double t, const Vec& x);

// Candidates may depend on the driving noise (u(t, x; omega)); a family
// binds one to a realization.
using CandidateFamily = std::function<CandidateIntegral(const NoiseRealization&)>;

CandidateFamily deterministic_family(CandidateIntegral u);

// Closed-form, noise-aware first integrals for the registry families:
//   additive    u = x_1 - a t - sigma w_1(t) - sum gamma_1
//   pure_jump   u = x_1 - sum_{tau <= t} gamma_1
//   geometric   u = x exp(-(alpha - sigma^2/2) t - sigma w(t)) / prod (1 + c)
//   ou_jump     u = e^{theta t} x - sigma sum e^{theta t_i} dw_i - sum e^{theta tau} gamma
//   rotation2d  u = x_1^2 + x_2^2 (sigma = 0 and no jumps only)
CandidateFamily registry_candidate(const ModelSpec& spec);

// u = x_1, not an integral of anything with nonzero dynamics.
CandidateFamily coordinate_candidate();

struct BuilderOptions {
  std::uint64_t probe_seed = 7;
  int probes = 64;
  double lo = -2.0;
  double hi = 2.0;
  double x_independence_tol = 1e-10;
};

// Q = -[a.grad u + 1/2 b b^T : hess u - b_ik d_i(b_jk d_j u)], D_k = -b_ik d_i u,
// G = u(t, x - g(t, gamma)) - u(t, x). Throws WrongVariantError when
// probing finds dg/dx != 0.
FieldDifferential first_integral_coeffs_xindep(const CandidateIntegral& u,
                                               const JumpDiffusionModel& model,
                                               const BuilderOptions& options = {});

// Same Q and D; G = u(t, x - g(t, x^{-1}(t, x, gamma), gamma)) - u(t, x).
FieldDifferential first_integral_coeffs_xdep(const CandidateIntegral& u,
                                             const JumpDiffusionModel& model);

// Pointwise explicit evolution u_{i+1} = u_i + Q dt + D.dw (+ G at jumps)
// on the nodes of `initial.grid`, starting from initial.values[0].
GridField evolve_field(const GridField& initial, const FieldDifferential& diff,
                       const MarkMeasure& marks, const NoiseRealization& noise,
                       Exec exec = Exec::serial);

// Grid-interpolation error estimate: cubic reconstruction from every other
// node compared against the skipped nodes, scaled by 1/16.
double interpolation_error_estimate(const SpatialGrid& grid, std::span<const double> values);

struct IwOptions {
  int margin_cells = 3;  // path points closer than this to the edge are excluded
  bool collect_rows = false;
};

// Compares F(t_{i+1}, x_{i+1}) - F(t_i, x_i) along the path with the
// generalized Ito-Wentzell right-hand side, splitting continuous and jump
// contributions.
VerificationReport ito_wentzell_residual(const FieldDifferential& diff, const GridField& field,
                                         const JumpDiffusionModel& model, const Trajectory& traj,
                                         const NoiseRealization& noise,
                                         const IwOptions& options = {});

struct FirstIntegralOptions {
  int refinement_levels = 0;  // extra Brownian-bridge halvings of the grid
  bool collect_rows = false;  // residual rows at the finest level
  Exec exec = Exec::parallel;
};

// Sup over nodes of |u(t, x(t; x0)) - u(0, x0)| per seed, ensemble max and
// RMS per refinement level, and the fitted order when levels >= 1.
VerificationReport verify_first_integral(const CandidateFamily& family,
                                         const JumpDiffusionModel& model, const Vec& x0,
                                         const std::vector<std::uint64_t>& seeds,
                                         const TimeGrid& grid,
                                         const FirstIntegralOptions& options = {});

// Same, for a candidate represented as a grid field evolved under each
// seed's noise: `make_field(noise)` must return the field history.
VerificationReport verify_first_integral_field(
    const std::function<GridField(const NoiseRealization&)>& make_field,
    const JumpDiffusionModel& model, const Vec& x0, const std::vector<std::uint64_t>& seeds,
    const TimeGrid& grid, Exec exec = Exec::parallel);

std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t count);

}  // namespace jumpflow
