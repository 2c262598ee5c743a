#include "jumpflow/densities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "jumpflow/errors.hpp"

namespace jumpflow {

std::vector<double> gaussian_field(const SpatialGrid& grid, const Vec& mean, double variance) {
  auto values = grid.sample([&](const Vec& x) {
    return std::exp(-(x - mean).squaredNorm() / (2.0 * variance));
  });
  const double mass = integrate(grid, values);
  if (!(mass > 0.0)) throw Error("Gaussian has no mass on the grid");
  for (double& v : values) v /= mass;
  return values;
}

double mollifier_variance(const SpatialGrid& grid) {
  const double h = grid.min_spacing();
  return 4.0 * h * h;
}

std::vector<double> mollified_delta(const SpatialGrid& grid, const Vec& x0) {
  return gaussian_field(grid, x0, mollifier_variance(grid));
}

DensitySampler::DensitySampler(const SpatialGrid& grid, const std::vector<double>& density)
    : grid_(grid), density_(density) {
  for (double v : density) {
    if (v < 0.0 || !std::isfinite(v)) throw Error("density must be finite and nonnegative to be sampled");
  }
  std::vector<double> mass;
  if (grid.dim() == 1) {
    // cells between consecutive nodes, linear density inside each
    const double h = grid.axis(0).spacing();
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) mass.push_back(0.5 * h * (density[j] + density[j + 1]));
  } else {
    const auto w = trapezoid_weights(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) mass.push_back(w[j] * density[j]);
  }
  cdf_.resize(mass.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < mass.size(); ++j) {
    acc += mass[j];
    cdf_[j] = acc;
  }
  if (!(acc > 0.0)) throw Error("density has no mass");
  for (double& c : cdf_) c /= acc;
}

Vec DensitySampler::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const auto j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
      it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  Vec x = grid_.point(j);
  if (grid_.dim() == 1) {
    const double ra = density_[j];
    const double rb = density_[j + 1];
    const double v = u01(rng);
    // inverse of the linear-density CDF on the cell
    const double s = ra + rb <= 0.0 ? v : v * (ra + rb) / (ra + std::sqrt(ra * ra + (rb - ra) * v * (ra + rb)));
    x[0] += std::clamp(s, 0.0, 1.0) * grid_.axis(0).spacing();
    return x;
  }
  for (int d = 0; d < grid_.dim(); ++d) {
    const auto& axis = grid_.axis(d);
    x[d] = std::clamp(x[d] + (u01(rng) - 0.5) * axis.spacing(), axis.lo, axis.hi);
  }
  return x;
}

}  // namespace jumpflow
