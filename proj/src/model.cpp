#include "jumpflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "jumpflow/errors.hpp"

namespace jumpflow {

double MarkMeasure::total_rate() const {
  double total = 0.0;
  for (const auto& atom : atoms) total += atom.rate;
  return total;
}

void validate_marks(const MarkMeasure& marks) {
  for (std::size_t j = 0; j < marks.atoms.size(); ++j) {
    const double rate = marks.atoms[j].rate;
    if (!std::isfinite(rate) || rate < 0.0) {
      throw InvalidModelError("mark atom " + std::to_string(j) + " has invalid rate " +
                              std::to_string(rate));
    }
  }
  if (!marks.empty() && !(marks.total_rate() > 0.0)) {
    throw InvalidModelError("nonempty mark measure with zero total rate");
  }
  for (std::size_t j = 0; j < marks.atoms.size(); ++j) {
    if (marks.atoms[j].rate == 0.0) {
      throw InvalidModelError("mark atom " + std::to_string(j) + " has zero rate");
    }
  }
}

double fd_step(double xi) { return 1e-6 * (1.0 + std::abs(xi)); }

Mat drift_jacobian(const JumpDiffusionModel& model, double t, const Vec& x) {
  if (model.drift_jacobian) return model.drift_jacobian(t, x);
  const int n = model.dim;
  Mat jac(n, n);
  Vec xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = fd_step(x[j]);
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    jac.col(j) = (model.drift(t, xp) - model.drift(t, xm)) / (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  return jac;
}

std::vector<Mat> diffusion_gradient(const JumpDiffusionModel& model, double t, const Vec& x) {
  if (model.diffusion_gradient) return model.diffusion_gradient(t, x);
  const int n = model.dim;
  std::vector<Mat> grad(n);
  Vec xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = fd_step(x[j]);
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    grad[j] = (model.diffusion(t, xp) - model.diffusion(t, xm)) / (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  return grad;
}

std::vector<Mat> diffusion_hessian(const JumpDiffusionModel& model, double t, const Vec& x) {
  if (model.diffusion_hessian) return model.diffusion_hessian(t, x);
  const int n = model.dim;
  std::vector<Mat> hess(static_cast<std::size_t>(n * n));
  Vec xp = x, xm = x;
  for (int l = 0; l < n; ++l) {
    // nested differences need a wider step to stay above rounding noise
    const double h = model.diffusion_gradient ? fd_step(x[l]) : 1e-4 * (1.0 + std::abs(x[l]));
    xp[l] = x[l] + h;
    xm[l] = x[l] - h;
    const auto gp = diffusion_gradient(model, t, xp);
    const auto gm = diffusion_gradient(model, t, xm);
    for (int j = 0; j < n; ++j) hess[j * n + l] = (gp[j] - gm[j]) / (2.0 * h);
    xp[l] = xm[l] = x[l];
  }
  return hess;
}

Mat jump_jacobian(const JumpDiffusionModel& model, double t, const Vec& x, const Vec& mark) {
  if (model.jump_jacobian) return model.jump_jacobian(t, x, mark);
  const int n = model.dim;
  Mat jac(n, n);
  Vec xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = fd_step(x[j]);
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    jac.col(j) = (model.jump(t, xp, mark) - model.jump(t, xm, mark)) / (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  return jac;
}

Vec diffusion_divergence(const JumpDiffusionModel& model, double t, const Vec& x) {
  const auto grad = diffusion_gradient(model, t, x);
  Vec div = Vec::Zero(model.noise_dim);
  for (int i = 0; i < model.dim; ++i) div += grad[i].row(i).transpose();
  return div;
}

bool uses_fd_derivatives(const JumpDiffusionModel& model) {
  return !model.drift_jacobian || !model.diffusion_gradient ||
         (model.has_jumps() && !model.jump_jacobian);
}

void validate_dimensions(const JumpDiffusionModel& model, double t, const Vec& x) {
  if (model.dim < 1 || model.noise_dim < 0) throw InvalidModelError("bad model dimensions");
  if (!model.drift || !model.diffusion) throw InvalidModelError("model lacks drift or diffusion");
  if (x.size() != model.dim) throw InvalidModelError("state has wrong dimension");
  if (model.drift(t, x).size() != model.dim) throw InvalidModelError("drift returns wrong size");
  const Mat b = model.diffusion(t, x);
  if (b.rows() != model.dim || b.cols() != model.noise_dim) {
    throw InvalidModelError("diffusion must be n x m");
  }
  if (model.has_jumps()) {
    if (!model.jump) throw InvalidModelError("model has marks but no jump amplitude");
    for (const auto& atom : model.marks.atoms) {
      if (atom.mark.size() != model.mark_dim) throw InvalidModelError("mark has wrong dimension");
      if (model.jump(t, x, atom.mark).size() != model.dim) {
        throw InvalidModelError("jump amplitude returns wrong size");
      }
    }
  }
}

namespace {

double rel_gap(const Mat& analytic, const Mat& numeric) {
  const double scale = 1.0 + analytic.cwiseAbs().maxCoeff();
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

SmoothnessProbe probe_derivatives(const JumpDiffusionModel& model, std::uint64_t seed, int count,
                                  double lo, double hi, double t_lo, double t_hi,
                                  double tolerance) {
  // Build a copy with every analytic derivative stripped so the helpers fall
  // back to central differences.
  JumpDiffusionModel fd = model;
  fd.drift_jacobian = nullptr;
  fd.diffusion_gradient = nullptr;
  fd.diffusion_hessian = nullptr;
  fd.jump_jacobian = nullptr;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo, hi);
  std::uniform_real_distribution<double> ut(t_lo, t_hi);

  SmoothnessProbe out;
  auto record = [&](double gap, const char* what) {
    if (gap > out.max_rel_error) {
      out.max_rel_error = gap;
      out.worst = what;
    }
  };
  for (int p = 0; p < count; ++p) {
    const double t = ut(rng);
    Vec x(model.dim);
    for (int i = 0; i < model.dim; ++i) x[i] = ux(rng);
    if (model.drift_jacobian) record(rel_gap(model.drift_jacobian(t, x), drift_jacobian(fd, t, x)), "grad_a");
    if (model.diffusion_gradient) {
      const auto an = model.diffusion_gradient(t, x);
      const auto nu = diffusion_gradient(fd, t, x);
      for (int j = 0; j < model.dim; ++j) record(rel_gap(an[j], nu[j]), "grad_b");
    }
    if (model.diffusion_hessian && model.diffusion_gradient) {
      const auto an = model.diffusion_hessian(t, x);
      JumpDiffusionModel half = model;
      half.diffusion_hessian = nullptr;
      const auto nu = diffusion_hessian(half, t, x);
      for (std::size_t j = 0; j < an.size(); ++j) record(rel_gap(an[j], nu[j]), "hess_b");
    }
    if (model.jump_jacobian && model.has_jumps()) {
      for (const auto& atom : model.marks.atoms) {
        record(rel_gap(model.jump_jacobian(t, x, atom.mark), jump_jacobian(fd, t, x, atom.mark)),
               "grad_g");
      }
    }
    ++out.probes;
  }
  out.passed = out.max_rel_error <= tolerance;
  return out;
}

}  // namespace jumpflow
