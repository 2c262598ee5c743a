#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "jumpflow/grid.hpp"

namespace jumpflow {

// Isotropic Gaussian sampled on the grid and renormalized to unit
// trapezoid mass.
std::vector<double> gaussian_field(const SpatialGrid& grid, const Vec& mean, double variance);

// Narrow Gaussian standing in for a point mass, variance 4 dx^2.
double mollifier_variance(const SpatialGrid& grid);
std::vector<double> mollified_delta(const SpatialGrid& grid, const Vec& x0);

// Draws points from a nonnegative grid density. In 1D the density is taken
// piecewise linear between nodes, so sample means of linear functions match
// the trapezoid rule; in 2D a node is drawn by trapezoid mass and jittered
// uniformly within its cell.
class DensitySampler {
 public:
  DensitySampler(const SpatialGrid& grid, const std::vector<double>& density);
  Vec sample(std::mt19937_64& rng) const;

 private:
  SpatialGrid grid_;
  std::vector<double> density_;
  std::vector<double> cdf_;
};

}  // namespace jumpflow
