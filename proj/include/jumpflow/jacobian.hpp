#pragma once

#include <string>
#include <vector>

#include "jumpflow/model.hpp"
#include "jumpflow/noise.hpp"
#include "jumpflow/path.hpp"

namespace jumpflow {

struct InverseMapOptions {
  double tolerance = 1e-12;  // on |x + g - y| / (1 + |y|)
  int max_iterations = 50;
  double min_abs_det = 1e-8;
  int max_halvings = 30;
};

// Solves y = x + g(t, x, gamma) for x by damped Newton from x = y.
// Throws NoInverseError or SingularMapError with (t, y) context.
Vec inverse_jump_map(const JumpDiffusionModel& model, double t, const Vec& y, const Vec& mark,
                     const InverseMapOptions& options = {});

// det(I + dg/dx) at (t, x, gamma).
double jump_jacobian_det(const JumpDiffusionModel& model, double t, const Vec& x,
                         const Vec& mark);

// Determinant of d x^{-1} / d y at the pre-image x. The product with
// det(I + dg/dx) is checked against 1 to 1e-10.
double inverse_map_det(const JumpDiffusionModel& model, double t, const Vec& x, const Vec& mark);

// sum_i da_i/dx_i + 1/2 sum_k [(sum_i db_ik/dx_i)^2 - sum_ij db_ik/dx_j db_jk/dx_i]
double k_coefficient(const JumpDiffusionModel& model, double t, const Vec& x);

enum class JacobianMethod { sde_integrated, closed_form };

struct JacobianSeries {
  std::vector<double> values;  // aligned with Trajectory nodes, values[0] = 1
  JacobianMethod method = JacobianMethod::sde_integrated;
};

struct JacobianPair {
  JacobianSeries integrated;   // recursive log-form update
  JacobianSeries closed_form;  // exponential of accumulated quadratures

  double max_relative_gap() const;
};

// Both evaluations of the flow-map Jacobian determinant along `traj`.
// Throws InvariantViolationError when a jump determinant is <= 0.
JacobianPair evolve_jacobian(const JumpDiffusionModel& model, const Trajectory& traj,
                             const NoiseRealization& noise);

const char* to_string(JacobianMethod method);

}  // namespace jumpflow
