#include "jumpflow/grid.hpp"

#include <algorithm>
#include <cmath>

#include "jumpflow/errors.hpp"

namespace jumpflow {

SpatialGrid::SpatialGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) throw Error("grid must be one- or two-dimensional");
  size_ = 1;
  for (const auto& a : axes_) {
    if (a.points < 4 || !(a.hi > a.lo)) throw Error("grid axis needs hi > lo and >= 4 points");
    size_ *= static_cast<std::size_t>(a.points);
  }
}

SpatialGrid SpatialGrid::line(double lo, double hi, int points) {
  return SpatialGrid({Axis{lo, hi, points}});
}

SpatialGrid SpatialGrid::square(double lo, double hi, int points) {
  return SpatialGrid({Axis{lo, hi, points}, Axis{lo, hi, points}});
}

Vec SpatialGrid::point(std::size_t flat) const {
  Vec x(dim());
  for (int d = 0; d < dim(); ++d) x[d] = axes_[d].coord(index(flat, d));
  return x;
}

double SpatialGrid::cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= a.spacing();
  return v;
}

double SpatialGrid::min_spacing() const {
  double h = axes_[0].spacing();
  for (const auto& a : axes_) h = std::min(h, a.spacing());
  return h;
}

bool SpatialGrid::contains(const Vec& x) const {
  for (int d = 0; d < dim(); ++d) {
    if (!(x[d] >= axes_[d].lo && x[d] <= axes_[d].hi)) return false;
  }
  return true;
}

std::vector<double> SpatialGrid::sample(const std::function<double(const Vec&)>& fn) const {
  std::vector<double> out(size_);
  for (std::size_t j = 0; j < size_; ++j) out[j] = fn(point(j));
  return out;
}

std::vector<double> trapezoid_weights(const SpatialGrid& grid) {
  std::vector<double> w(grid.size(), 1.0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (int d = 0; d < grid.dim(); ++d) {
      const int i = grid.index(j, d);
      double wd = grid.axis(d).spacing();
      if (i == 0 || i == grid.axis(d).points - 1) wd *= 0.5;
      w[j] *= wd;
    }
  }
  return w;
}

double integrate(const SpatialGrid& grid, std::span<const double> values) {
  const auto w = trapezoid_weights(grid);
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * values[j];
  return acc;
}

double integrate(const SpatialGrid& grid, std::span<const double> values,
                 const std::function<double(const Vec&)>& f) {
  const auto w = trapezoid_weights(grid);
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * values[j] * f(grid.point(j));
  return acc;
}

double cell_sum(const SpatialGrid& grid, std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc * grid.cell_volume();
}

double l1_distance(const SpatialGrid& grid, std::span<const double> a, std::span<const double> b) {
  const auto w = trapezoid_weights(grid);
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * std::abs(a[j] - b[j]);
  return acc;
}

double max_abs_difference(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

const std::vector<double>& GridField::left_limit(std::size_t i) const {
  auto it = left_limits.find(i);
  return it == left_limits.end() ? values[i] : it->second;
}

namespace {

constexpr double kNodes[4] = {-1.0, 0.0, 1.0, 2.0};

// Lagrange basis on nodes -1..2 and its first two derivatives at f.
struct Basis {
  double l[4];
  double d1[4];
  double d2[4];
};

Basis lagrange(double f) {
  Basis b{};
  for (int j = 0; j < 4; ++j) {
    double denom = 1.0;
    for (int m = 0; m < 4; ++m) {
      if (m != j) denom *= kNodes[j] - kNodes[m];
    }
    double value = 1.0;
    double first = 0.0;
    double second = 0.0;
    for (int m = 0; m < 4; ++m) {
      if (m != j) value *= f - kNodes[m];
    }
    for (int p = 0; p < 4; ++p) {
      if (p == j) continue;
      double prod = 1.0;
      for (int m = 0; m < 4; ++m) {
        if (m != j && m != p) prod *= f - kNodes[m];
      }
      first += prod;
      for (int q = 0; q < 4; ++q) {
        if (q == j || q == p) continue;
        double prod2 = 1.0;
        for (int m = 0; m < 4; ++m) {
          if (m != j && m != p && m != q) prod2 *= f - kNodes[m];
        }
        second += prod2;
      }
    }
    b.l[j] = value / denom;
    b.d1[j] = first / denom;
    b.d2[j] = second / denom;
  }
  return b;
}

struct AxisStencil {
  int start = 0;  // first node of the 4-point stencil
  double frac = 0.0;  // position relative to node start + 1
  bool outside = false;
};

AxisStencil locate(const Axis& axis, double x, Outside outside) {
  AxisStencil s;
  if (!(x >= axis.lo && x <= axis.hi)) {
    if (outside == Outside::zero || std::isnan(x)) {
      s.outside = true;
      return s;
    }
    x = std::clamp(x, axis.lo, axis.hi);
  }
  const double pos = (x - axis.lo) / axis.spacing();
  int i = static_cast<int>(std::floor(pos));
  i = std::clamp(i, 0, axis.points - 1);
  const int start = std::clamp(i - 1, 0, axis.points - 4);
  s.start = start;
  s.frac = pos - (start + 1);
  return s;
}

}  // namespace

Stencil make_stencil(const SpatialGrid& grid, const Vec& x, Outside outside) {
  Stencil out;
  if (grid.dim() == 1) {
    const auto s = locate(grid.axis(0), x[0], outside);
    if (s.outside) return out;
    const auto b = lagrange(s.frac);
    out.count = 4;
    for (int k = 0; k < 4; ++k) {
      out.index[k] = static_cast<std::size_t>(s.start + k);
      out.weight[k] = b.l[k];
    }
    return out;
  }
  const auto s0 = locate(grid.axis(0), x[0], outside);
  const auto s1 = locate(grid.axis(1), x[1], outside);
  if (s0.outside || s1.outside) return out;
  const auto b0 = lagrange(s0.frac);
  const auto b1 = lagrange(s1.frac);
  const std::size_t n0 = static_cast<std::size_t>(grid.axis(0).points);
  out.count = 16;
  for (int q = 0; q < 4; ++q) {
    for (int p = 0; p < 4; ++p) {
      const int k = q * 4 + p;
      out.index[k] = static_cast<std::size_t>(s0.start + p) +
                     n0 * static_cast<std::size_t>(s1.start + q);
      out.weight[k] = b0.l[p] * b1.l[q];
    }
  }
  return out;
}

double interpolate(const SpatialGrid& grid, std::span<const double> values, const Vec& x,
                   Outside outside) {
  return apply_stencil(make_stencil(grid, x, outside), values);
}

LocalJet interpolate_jet(const SpatialGrid& grid, std::span<const double> values, const Vec& x) {
  LocalJet jet;
  const int n = grid.dim();
  jet.gradient = Vec::Zero(n);
  jet.hessian = Mat::Zero(n, n);
  if (n == 1) {
    const auto& axis = grid.axis(0);
    const auto s = locate(axis, x[0], Outside::clamp);
    const auto b = lagrange(s.frac);
    const double h = axis.spacing();
    for (int k = 0; k < 4; ++k) {
      const double v = values[static_cast<std::size_t>(s.start + k)];
      jet.value += b.l[k] * v;
      jet.gradient[0] += b.d1[k] * v / h;
      jet.hessian(0, 0) += b.d2[k] * v / (h * h);
    }
    return jet;
  }
  const auto s0 = locate(grid.axis(0), x[0], Outside::clamp);
  const auto s1 = locate(grid.axis(1), x[1], Outside::clamp);
  const auto b0 = lagrange(s0.frac);
  const auto b1 = lagrange(s1.frac);
  const double h0 = grid.axis(0).spacing();
  const double h1 = grid.axis(1).spacing();
  const std::size_t n0 = static_cast<std::size_t>(grid.axis(0).points);
  for (int q = 0; q < 4; ++q) {
    for (int p = 0; p < 4; ++p) {
      const double v = values[static_cast<std::size_t>(s0.start + p) +
                              n0 * static_cast<std::size_t>(s1.start + q)];
      jet.value += b0.l[p] * b1.l[q] * v;
      jet.gradient[0] += b0.d1[p] * b1.l[q] * v / h0;
      jet.gradient[1] += b0.l[p] * b1.d1[q] * v / h1;
      jet.hessian(0, 0) += b0.d2[p] * b1.l[q] * v / (h0 * h0);
      jet.hessian(1, 1) += b0.l[p] * b1.d2[q] * v / (h1 * h1);
      jet.hessian(0, 1) += b0.d1[p] * b1.d1[q] * v / (h0 * h1);
    }
  }
  jet.hessian(1, 0) = jet.hessian(0, 1);
  return jet;
}

}  // namespace jumpflow
