#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jumpflow/types.hpp"

namespace jumpflow {

struct MarkAtom {
  Vec mark;
  double rate = 0.0;  // 1/time
};

// Finite-atom jump mark measure. All integrals against it are exact sums.
struct MarkMeasure {
  std::vector<MarkAtom> atoms;

  bool empty() const { return atoms.empty(); }
  double total_rate() const;
};

// Throws InvalidModelError for non-positive or non-finite rates, or a
// nonempty atom list with zero total rate.
void validate_marks(const MarkMeasure& marks);

using DriftFn = std::function<Vec(double t, const Vec& x)>;
using DiffusionFn = std::function<Mat(double t, const Vec& x)>;
using JumpFn = std::function<Vec(double t, const Vec& x, const Vec& mark)>;
using DriftJacobianFn = std::function<Mat(double t, const Vec& x)>;
// Entry [j](i, k) holds d b_ik / d x_j.
using DiffusionGradientFn = std::function<std::vector<Mat>(double t, const Vec& x)>;
// Entry [j * n + l](i, k) holds d^2 b_ik / d x_j d x_l.
using DiffusionHessianFn = std::function<std::vector<Mat>(double t, const Vec& x)>;
using JumpJacobianFn = std::function<Mat(double t, const Vec& x, const Vec& mark)>;

// dx = a(t,x) dt + b(t,x) dw + int g(t,x,gamma) nu(dt, dgamma).
//
// The derivative callables are optional. When one is missing, the helpers
// below substitute central differences with step 1e-6 * (1 + |x_i|).
struct JumpDiffusionModel {
  std::string name;
  int dim = 1;        // n
  int noise_dim = 1;  // m
  int mark_dim = 1;

  // Coefficients do not depend on t; solvers may cache node values.
  bool autonomous = false;
  // g does not depend on x; set by the registry, verified by probing.
  bool state_independent_jumps = false;

  DriftFn drift;
  DiffusionFn diffusion;
  JumpFn jump;

  DriftJacobianFn drift_jacobian;
  DiffusionGradientFn diffusion_gradient;
  DiffusionHessianFn diffusion_hessian;
  JumpJacobianFn jump_jacobian;

  MarkMeasure marks;

  bool has_jumps() const { return !marks.empty(); }
};

double fd_step(double xi);

Mat drift_jacobian(const JumpDiffusionModel& model, double t, const Vec& x);
std::vector<Mat> diffusion_gradient(const JumpDiffusionModel& model, double t, const Vec& x);
std::vector<Mat> diffusion_hessian(const JumpDiffusionModel& model, double t, const Vec& x);
Mat jump_jacobian(const JumpDiffusionModel& model, double t, const Vec& x, const Vec& mark);

// sum_i d b_ik / d x_i, one entry per Wiener component.
Vec diffusion_divergence(const JumpDiffusionModel& model, double t, const Vec& x);

// True when any derivative is supplied by finite differences.
bool uses_fd_derivatives(const JumpDiffusionModel& model);

// Throws InvalidModelError if a callable returns the wrong shape at (t, x).
void validate_dimensions(const JumpDiffusionModel& model, double t, const Vec& x);

struct SmoothnessProbe {
  double max_rel_error = 0.0;
  std::string worst;  // which derivative was worst
  int probes = 0;
  bool passed = true;
};

// Compares analytic derivatives with central differences at random (t, x)
// drawn from [t_lo, t_hi] x [lo, hi]^n. Missing derivatives are skipped.
SmoothnessProbe probe_derivatives(const JumpDiffusionModel& model, std::uint64_t seed,
                                  int count, double lo, double hi, double t_lo = 0.0,
                                  double t_hi = 1.0, double tolerance = 1e-5);

}  // namespace jumpflow
