#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "jumpflow/grid.hpp"

namespace oracle {

inline double poisson_pmf(int k, double mean) {
  return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double normal_cdf(double x, double mean, double var) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Mass, mean and variance by the trapezoid rule.
inline std::vector<double> moments(const jumpflow::SpatialGrid& grid, const std::vector<double>& p) {
  const double m0 = jumpflow::integrate(grid, p);
  const double m1 = jumpflow::integrate(grid, p, [](const jumpflow::Vec& x) { return x[0]; }) / m0;
  const double m2 = jumpflow::integrate(grid, p, [](const jumpflow::Vec& x) { return x[0] * x[0]; }) / m0;
  return {m0, m1, m2 - m1 * m1};
}

// Least-squares slope of log(err) against log(h).
inline double slope(const std::vector<double>& h, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
