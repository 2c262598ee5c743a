#include "jumpflow/spatial_ops.hpp"

#include <algorithm>
#include <cmath>

#include "jumpflow/errors.hpp"
#include "jumpflow/jacobian.hpp"
#include "jumpflow/parallel.hpp"

namespace jumpflow {

NodeCoefficients sample_coefficients(const JumpDiffusionModel& model, const SpatialGrid& grid,
                                     double t, Exec exec) {
  NodeCoefficients c;
  c.t = t;
  c.dim = model.dim;
  c.noise_dim = model.noise_dim;
  const int n = model.dim;
  const int m = model.noise_dim;
  const std::size_t size = grid.size();
  if (grid.dim() != n) throw InvalidModelError("grid dimension does not match the model");
  c.a.resize(size * n);
  c.B.resize(size * n * n);
  c.b.resize(size * n * m);
  std::vector<double> node_max_a(size), node_max_B(size);
  parallel_for(size, [&](std::size_t j) {
    const Vec x = grid.point(j);
    const Vec a = model.drift(t, x);
    double ma = 0.0;
    for (int d = 0; d < n; ++d) {
      c.a[j * n + d] = a[d];
      ma = std::max(ma, std::abs(a[d]));
    }
    double mb = 0.0;
    if (m > 0) {
      const Mat b = model.diffusion(t, x);
      const Mat B = b * b.transpose();
      for (int r = 0; r < n; ++r) {
        for (int s = 0; s < n; ++s) c.B[(j * n + r) * n + s] = B(r, s);
        for (int k = 0; k < m; ++k) c.b[(j * n + r) * m + k] = b(r, k);
      }
      mb = n == 1 ? std::abs(B(0, 0)) : B.operatorNorm();
    }
    node_max_a[j] = ma;
    node_max_B[j] = mb;
  }, exec);
  for (std::size_t j = 0; j < size; ++j) {
    if (!std::isfinite(node_max_a[j]) || !std::isfinite(node_max_B[j])) {
      throw InvalidModelError("non-finite coefficients at grid node " + std::to_string(j));
    }
    c.max_a = std::max(c.max_a, node_max_a[j]);
    c.max_B = std::max(c.max_B, node_max_B[j]);
  }
  return c;
}

CoefficientCache::CoefficientCache(const JumpDiffusionModel& model, const SpatialGrid& grid,
                                   Exec exec)
    : model_(&model), grid_(grid), exec_(exec) {}

const NodeCoefficients& CoefficientCache::at(double t) {
  if (cached_ && (model_->autonomous || cached_->t == t)) return *cached_;
  cached_ = sample_coefficients(*model_, grid_, t, exec_);
  return *cached_;
}

CflLimits cfl_limits(const JumpDiffusionModel& model, const SpatialGrid& grid, double t0,
                     double T) {
  double max_a = 0.0, max_B = 0.0;
  for (double t : {t0, 0.5 * (t0 + T), T}) {
    const auto c = sample_coefficients(model, grid, t);
    max_a = std::max(max_a, c.max_a);
    max_B = std::max(max_B, c.max_B);
    if (model.autonomous) break;
  }
  const double h = grid.min_spacing();
  const double inf = std::numeric_limits<double>::infinity();
  CflLimits out;
  out.diffusion = max_B > 0.0 ? h * h / (2.0 * max_B) : inf;
  out.advection = max_a > 0.0 ? h / (2.0 * max_a) : inf;
  out.jumps = model.has_jumps() ? 0.1 / model.marks.total_rate() : inf;
  out.dt = std::min({out.diffusion, out.advection, out.jumps});
  out.binding = out.dt == out.diffusion ? "diffusion" : out.dt == out.advection ? "advection" : "jumps";
  if (!std::isfinite(out.dt)) {
    out.dt = T - t0;
    out.binding = "none";
  }
  return out;
}

int cfl_steps(const CflLimits& cfl, double t0, double T, double fraction) {
  return std::max(1, static_cast<int>(std::ceil((T - t0) / (fraction * cfl.dt) - 1e-9)));
}

namespace {

// Neighbour of node j along axis d, or -1 beyond the edge.
struct Neighbours {
  long long lo = -1;
  long long hi = -1;
};

inline Neighbours neighbours(const SpatialGrid& grid, std::size_t j, int d) {
  const int i = grid.index(j, d);
  const auto s = static_cast<long long>(grid.stride(d));
  Neighbours nb;
  if (i > 0) nb.lo = static_cast<long long>(j) - s;
  if (i + 1 < grid.axis(d).points) nb.hi = static_cast<long long>(j) + s;
  return nb;
}

inline double at_or_zero(std::span<const double> v, long long k) {
  return k < 0 ? 0.0 : v[static_cast<std::size_t>(k)];
}

// Diagonal corner offsets for the 2D cross derivative; -1 when outside.
inline long long corner(const SpatialGrid& grid, std::size_t j, int s0, int s1) {
  const int i0 = grid.index(j, 0) + s0;
  const int i1 = grid.index(j, 1) + s1;
  if (i0 < 0 || i1 < 0 || i0 >= grid.axis(0).points || i1 >= grid.axis(1).points) return -1;
  return static_cast<long long>(i0) + static_cast<long long>(grid.axis(0).points) * i1;
}

inline long long clamped_corner(const SpatialGrid& grid, std::size_t j, int s0, int s1) {
  const int i0 = std::clamp(grid.index(j, 0) + s0, 0, grid.axis(0).points - 1);
  const int i1 = std::clamp(grid.index(j, 1) + s1, 0, grid.axis(1).points - 1);
  return static_cast<long long>(i0) + static_cast<long long>(grid.axis(0).points) * i1;
}

}  // namespace

void fokker_planck_rhs(const SpatialGrid& grid, const NodeCoefficients& c,
                       std::span<const double> p, std::span<double> out, Exec exec) {
  const int n = c.dim;
  const bool diffusive = c.noise_dim > 0;
  parallel_for(grid.size(), [&](std::size_t j) {
    double acc = 0.0;
    for (int d = 0; d < n; ++d) {
      const double h = grid.axis(d).spacing();
      const auto nb = neighbours(grid, j, d);
      const double aj = c.a[j * n + d];
      // faces are evaluated identically from both sides so fluxes telescope
      double right;
      if (nb.hi >= 0) {
        const auto k = static_cast<std::size_t>(nb.hi);
        const double u = 0.5 * (aj + c.a[k * n + d]);
        right = u > 0.0 ? u * p[j] : u * p[k];
      } else {
        right = aj > 0.0 ? aj * p[j] : 0.0;
      }
      double left;
      if (nb.lo >= 0) {
        const auto k = static_cast<std::size_t>(nb.lo);
        const double u = 0.5 * (c.a[k * n + d] + aj);
        left = u > 0.0 ? u * p[k] : u * p[j];
      } else {
        left = aj > 0.0 ? 0.0 : aj * p[j];
      }
      acc -= (right - left) / h;

      if (diffusive) {
        const std::size_t dd = static_cast<std::size_t>(d * n + d);
        const double qj = p[j] * c.B[j * n * n + dd];
        const double qh = nb.hi >= 0 ? p[nb.hi] * c.B[static_cast<std::size_t>(nb.hi) * n * n + dd] : 0.0;
        const double ql = nb.lo >= 0 ? p[nb.lo] * c.B[static_cast<std::size_t>(nb.lo) * n * n + dd] : 0.0;
        acc += 0.5 * (qh - 2.0 * qj + ql) / (h * h);
      }
    }
    if (diffusive && n == 2) {
      auto q = [&](long long k) {
        return k < 0 ? 0.0 : p[static_cast<std::size_t>(k)] * c.B[static_cast<std::size_t>(k) * 4 + 1];
      };
      const double h0 = grid.axis(0).spacing();
      const double h1 = grid.axis(1).spacing();
      acc += (q(corner(grid, j, 1, 1)) - q(corner(grid, j, 1, -1)) - q(corner(grid, j, -1, 1)) +
              q(corner(grid, j, -1, -1))) / (4.0 * h0 * h1);
    }
    out[j] = acc;
  }, exec);
}

void stochastic_flux(const SpatialGrid& grid, const NodeCoefficients& c, std::span<const double> p,
                     const Vec& dw, std::span<double> out, Exec exec) {
  const int n = c.dim;
  const int m = c.noise_dim;
  parallel_for(grid.size(), [&](std::size_t j) {
    double acc = 0.0;
    for (int d = 0; d < n; ++d) {
      const double h = grid.axis(d).spacing();
      const auto nb = neighbours(grid, j, d);
      for (int k = 0; k < m; ++k) {
        const double sh = nb.hi >= 0 ? p[nb.hi] * c.b[(static_cast<std::size_t>(nb.hi) * n + d) * m + k] : 0.0;
        const double sl = nb.lo >= 0 ? p[nb.lo] * c.b[(static_cast<std::size_t>(nb.lo) * n + d) * m + k] : 0.0;
        acc -= dw[k] * (sh - sl) / (2.0 * h);
      }
    }
    out[j] = acc;
  }, exec);
}

void generator(const SpatialGrid& grid, const NodeCoefficients& c, std::span<const double> v,
               std::span<double> out, Exec exec) {
  const int n = c.dim;
  const bool diffusive = c.noise_dim > 0;
  parallel_for(grid.size(), [&](std::size_t j) {
    double acc = 0.0;
    for (int d = 0; d < n; ++d) {
      const double h = grid.axis(d).spacing();
      const auto nb = neighbours(grid, j, d);
      const double vh = nb.hi >= 0 ? v[nb.hi] : v[j];
      const double vl = nb.lo >= 0 ? v[nb.lo] : v[j];
      const double a = c.a[j * n + d];
      acc += a > 0.0 ? a * (vh - v[j]) / h : a * (v[j] - vl) / h;
      if (diffusive) acc += 0.5 * c.B[j * n * n + d * n + d] * (vh - 2.0 * v[j] + vl) / (h * h);
    }
    if (diffusive && n == 2) {
      const double b01 = c.B[j * 4 + 1];
      if (b01 != 0.0) {
        auto at = [&](long long k) { return v[static_cast<std::size_t>(k)]; };
        acc += b01 * (at(clamped_corner(grid, j, 1, 1)) - at(clamped_corner(grid, j, 1, -1)) -
                      at(clamped_corner(grid, j, -1, 1)) + at(clamped_corner(grid, j, -1, -1))) /
               (4.0 * grid.axis(0).spacing() * grid.axis(1).spacing());
      }
    }
    out[j] = acc;
  }, exec);
}

void jump_divergence(const SpatialGrid& grid, const JumpDiffusionModel& model, double t,
                     const Vec& mark, std::span<const double> p, std::span<double> out, Exec exec) {
  const int n = model.dim;
  std::vector<double> g(grid.size() * n);
  parallel_for(grid.size(), [&](std::size_t j) {
    const Vec gj = model.jump(t, grid.point(j), mark);
    for (int d = 0; d < n; ++d) g[j * n + d] = gj[d];
  }, exec);
  parallel_for(grid.size(), [&](std::size_t j) {
    double acc = 0.0;
    for (int d = 0; d < n; ++d) {
      const auto nb = neighbours(grid, j, d);
      const double sh = nb.hi >= 0 ? p[nb.hi] * g[static_cast<std::size_t>(nb.hi) * n + d] : 0.0;
      const double sl = nb.lo >= 0 ? p[nb.lo] * g[static_cast<std::size_t>(nb.lo) * n + d] : 0.0;
      acc -= (sh - sl) / (2.0 * grid.axis(d).spacing());
    }
    out[j] = acc;
  }, exec);
}

PullbackMap::PullbackMap(const JumpDiffusionModel& model, const SpatialGrid& grid, double t,
                         const Vec& mark) {
  const std::size_t size = grid.size();
  stencils_.resize(size);
  weights_.resize(size);
  const int n = model.dim;
  for (std::size_t j = 0; j < size; ++j) {
    const Vec y = grid.point(j);
    const Vec pre = inverse_jump_map(model, t, y, mark);
    stencils_[j] = make_stencil(grid, pre, Outside::zero);
    const Mat forward = Mat::Identity(n, n) + jump_jacobian(model, t, pre, mark);
    const double d = inverse_map_det(model, t, pre, mark);
    weights_[j] = d;
    max_weight_error_ = std::max(max_weight_error_, std::abs(d * forward.determinant() - 1.0));
  }
}

void PullbackMap::apply(std::span<const double> in, std::span<double> out, Exec exec) const {
  parallel_for(stencils_.size(), [&](std::size_t j) {
    out[j] = weights_[j] * apply_stencil(stencils_[j], in);
  }, exec);
}

ShiftMap::ShiftMap(const JumpDiffusionModel& model, const SpatialGrid& grid, double t,
                   const Vec& mark) {
  stencils_.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Vec y = grid.point(j);
    stencils_[j] = make_stencil(grid, y + model.jump(t, y, mark), Outside::clamp);
  }
}

void ShiftMap::apply(std::span<const double> in, std::span<double> out, Exec exec) const {
  parallel_for(stencils_.size(), [&](std::size_t j) { out[j] = apply_stencil(stencils_[j], in); }, exec);
}

JumpMapCache::JumpMapCache(const JumpDiffusionModel& model, const SpatialGrid& grid)
    : model_(&model), grid_(grid) {}

const PullbackMap& JumpMapCache::pullback(std::size_t atom, double t) {
  auto& slot = pull_[atom];
  if (!slot.second || (!model_->autonomous && slot.first != t)) {
    slot.first = t;
    slot.second = std::make_unique<PullbackMap>(*model_, grid_, t, model_->marks.atoms[atom].mark);
  }
  return *slot.second;
}

const ShiftMap& JumpMapCache::shift(std::size_t atom, double t) {
  auto& slot = shift_[atom];
  if (!slot.second || (!model_->autonomous && slot.first != t)) {
    slot.first = t;
    slot.second = std::make_unique<ShiftMap>(*model_, grid_, t, model_->marks.atoms[atom].mark);
  }
  return *slot.second;
}

}  // namespace jumpflow
