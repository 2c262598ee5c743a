#include "jumpflow/jacobian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jumpflow/errors.hpp"

namespace jumpflow {

namespace {

std::string context(double t, const Vec& y, const Vec& mark) {
  std::ostringstream os;
  os << "t=" << t << " y=[" << y.transpose() << "] mark=[" << mark.transpose() << "]";
  return os.str();
}

}  // namespace

Vec inverse_jump_map(const JumpDiffusionModel& model, double t, const Vec& y, const Vec& mark,
                     const InverseMapOptions& options) {
  const int n = model.dim;
  const double scale = 1.0 + y.norm();
  Vec x = y;
  Vec r = x + model.jump(t, x, mark) - y;
  double rn = r.norm();
  for (int it = 0; it <= options.max_iterations; ++it) {
    if (rn <= options.tolerance * scale) return x;
    if (it == options.max_iterations) break;
    const Mat m = Mat::Identity(n, n) + jump_jacobian(model, t, x, mark);
    const double det = m.determinant();
    if (!(std::abs(det) > options.min_abs_det)) {
      throw SingularMapError("jump map near-singular (det=" + std::to_string(det) + ") at " +
                             context(t, y, mark));
    }
    const Vec dx = m.partialPivLu().solve(r);
    double step = 1.0;
    Vec trial = x - dx;
    Vec trial_r = trial + model.jump(t, trial, mark) - y;
    for (int h = 0; h < options.max_halvings && !(trial_r.norm() < rn); ++h) {
      step *= 0.5;
      trial = x - step * dx;
      trial_r = trial + model.jump(t, trial, mark) - y;
    }
    x = std::move(trial);
    r = std::move(trial_r);
    rn = r.norm();
    if (!std::isfinite(rn)) break;
  }
  throw NoInverseError("Newton did not converge in " + std::to_string(options.max_iterations) +
                       " iterations at " + context(t, y, mark));
}

double jump_jacobian_det(const JumpDiffusionModel& model, double t, const Vec& x,
                         const Vec& mark) {
  const int n = model.dim;
  if (n == 1) return 1.0 + jump_jacobian(model, t, x, mark)(0, 0);
  return (Mat::Identity(n, n) + jump_jacobian(model, t, x, mark)).determinant();
}

double inverse_map_det(const JumpDiffusionModel& model, double t, const Vec& x, const Vec& mark) {
  const int n = model.dim;
  const Mat forward = Mat::Identity(n, n) + jump_jacobian(model, t, x, mark);
  const double a = forward.determinant();
  const double d = forward.inverse().determinant();
  if (!(std::abs(d * a - 1.0) <= 1e-10)) {
    throw InvariantViolationError("inverse-map determinant check failed: D*A = " +
                                  std::to_string(d * a));
  }
  return d;
}

double k_coefficient(const JumpDiffusionModel& model, double t, const Vec& x) {
  const int n = model.dim;
  double k = drift_jacobian(model, t, x).trace();
  if (model.noise_dim == 0) return k;
  const auto grad = diffusion_gradient(model, t, x);
  for (int c = 0; c < model.noise_dim; ++c) {
    double div = 0.0;
    double cross = 0.0;
    for (int i = 0; i < n; ++i) {
      div += grad[i](i, c);
      for (int j = 0; j < n; ++j) cross += grad[j](i, c) * grad[i](j, c);
    }
    k += 0.5 * (div * div - cross);
  }
  return k;
}

double JacobianPair::max_relative_gap() const {
  double gap = 0.0;
  for (std::size_t i = 0; i < integrated.values.size(); ++i) {
    const double a = integrated.values[i];
    const double b = closed_form.values[i];
    gap = std::max(gap, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
  }
  return gap;
}

JacobianPair evolve_jacobian(const JumpDiffusionModel& model, const Trajectory& traj,
                             const NoiseRealization& noise) {
  const std::size_t nodes = traj.size();
  if (nodes != noise.grid.nodes.size()) {
    throw Error("trajectory and noise are on different grids");
  }
  JacobianPair out;
  out.integrated.method = JacobianMethod::sde_integrated;
  out.closed_form.method = JacobianMethod::closed_form;
  out.integrated.values.assign(nodes, 1.0);
  out.closed_form.values.assign(nodes, 1.0);

  double j_rec = 1.0;
  double drift_sum = 0.0;  // int (K - |beta|^2 / 2) dt
  double ito_sum = 0.0;    // int beta . dw
  double jump_sum = 0.0;   // sum ln |det(I + dg/dx)|
  for (std::size_t i = 0; i + 1 < nodes; ++i) {
    const double t = traj.times[i];
    const Vec& x = traj.states[i];
    const double k = k_coefficient(model, t, x);
    double drift = k;
    double ito = 0.0;
    if (model.noise_dim > 0) {
      const Vec beta = diffusion_divergence(model, t, x);
      drift -= 0.5 * beta.squaredNorm();
      ito = beta.dot(noise.increment(i));
    }
    drift *= noise.dt(i);
    j_rec *= std::exp(drift + ito);
    drift_sum += drift;
    ito_sum += ito;

    const auto jumps = noise.jumps_at(i + 1);
    if (!jumps.empty()) {
      Vec pre = traj.left_limit(i + 1);
      for (const auto& jump : jumps) {
        const Vec& mark = model.marks.atoms[jump.atom].mark;
        const double det = jump_jacobian_det(model, jump.time, pre, mark);
        if (!(det > 0.0)) {
          throw InvariantViolationError("jump determinant " + std::to_string(det) +
                                        " <= 0 at node " + std::to_string(i + 1));
        }
        j_rec *= det;
        jump_sum += std::log(std::abs(det));
        pre += model.jump(jump.time, pre, mark);
      }
    }
    out.integrated.values[i + 1] = j_rec;
    out.closed_form.values[i + 1] = std::exp(drift_sum + ito_sum + jump_sum);
  }
  return out;
}

const char* to_string(JacobianMethod method) {
  return method == JacobianMethod::sde_integrated ? "sde-integrated" : "closed-form";
}

}  // namespace jumpflow
