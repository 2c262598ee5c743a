#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "jumpflow/types.hpp"

namespace jumpflow {

struct Axis {
  double lo = -1.0;
  double hi = 1.0;
  int points = 2;

  double spacing() const { return (hi - lo) / (points - 1); }
  double coord(int i) const { return lo + spacing() * i; }
};

// Uniform tensor grid in one or two dimensions, endpoints included.
// Flat index = i0 + points0 * i1.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  explicit SpatialGrid(std::vector<Axis> axes);
  static SpatialGrid line(double lo, double hi, int points);
  static SpatialGrid square(double lo, double hi, int points);

  int dim() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return size_; }
  const Axis& axis(int d) const { return axes_[static_cast<std::size_t>(d)]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t stride(int d) const { return d == 0 ? 1 : static_cast<std::size_t>(axes_[0].points); }
  int index(std::size_t flat, int d) const {
    return d == 0 ? static_cast<int>(flat % axes_[0].points)
                  : static_cast<int>(flat / axes_[0].points);
  }
  Vec point(std::size_t flat) const;
  double cell_volume() const;
  double min_spacing() const;
  bool contains(const Vec& x) const;

  std::vector<double> sample(const std::function<double(const Vec&)>& fn) const;

 private:
  std::vector<Axis> axes_;
  std::size_t size_ = 0;
};

// Trapezoid quadrature weights (product rule in 2D).
std::vector<double> trapezoid_weights(const SpatialGrid& grid);
double integrate(const SpatialGrid& grid, std::span<const double> values);
double integrate(const SpatialGrid& grid, std::span<const double> values,
                 const std::function<double(const Vec&)>& f);
// Plain cell-volume sum; the conservative schemes telescope exactly in it.
double cell_sum(const SpatialGrid& grid, std::span<const double> values);
double l1_distance(const SpatialGrid& grid, std::span<const double> a, std::span<const double> b);
double max_abs_difference(std::span<const double> a, std::span<const double> b);

// Values of a scalar field on a grid over a sequence of times. At jump
// times the pre-jump slice is kept in left_limits.
struct GridField {
  SpatialGrid grid;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::map<std::size_t, std::vector<double>> left_limits;

  std::size_t size() const { return values.size(); }
  const std::vector<double>& at(std::size_t i) const { return values[i]; }
  const std::vector<double>& left_limit(std::size_t i) const;
  const std::vector<double>& final() const { return values.back(); }
};

// What a stencil sees beyond the grid: zero (absorbing) or the nearest
// boundary value (zero-gradient).
enum class Outside { zero, clamp };

// Local 4-point (1D) or 4x4 (2D) cubic Lagrange stencil, shifted inward at
// the edges so in-domain points only touch real nodes.
struct Stencil {
  std::array<std::size_t, 16> index{};
  std::array<double, 16> weight{};
  int count = 0;
};

Stencil make_stencil(const SpatialGrid& grid, const Vec& x, Outside outside);
inline double apply_stencil(const Stencil& s, std::span<const double> values) {
  double acc = 0.0;
  for (int k = 0; k < s.count; ++k) acc += s.weight[k] * values[s.index[k]];
  return acc;
}

double interpolate(const SpatialGrid& grid, std::span<const double> values, const Vec& x,
                   Outside outside = Outside::zero);

struct LocalJet {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

// Value, gradient and Hessian of the cubic interpolant at x (x in domain).
LocalJet interpolate_jet(const SpatialGrid& grid, std::span<const double> values, const Vec& x);

}  // namespace jumpflow
