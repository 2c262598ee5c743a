#include "jumpflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jumpflow {

double fit_order(std::span<const double> steps, std::span<const double> errors) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < steps.size() && i < errors.size(); ++i) {
    if (steps[i] > 0.0 && errors[i] > 0.0) {
      lx.push_back(std::log(steps[i]));
      ly.push_back(std::log(errors[i]));
    }
  }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = mean(lx);
  const double my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double rms(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc / static_cast<double>(values.size()));
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

double standard_error(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  return sample_stddev(values) / std::sqrt(static_cast<double>(values.size()));
}

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace jumpflow
