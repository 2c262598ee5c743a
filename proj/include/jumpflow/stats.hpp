#pragma once

#include <span>
#include <vector>

namespace jumpflow {

// Least-squares slope of log(error) against log(step). Returns NaN when
// fewer than two positive pairs are available.
double fit_order(std::span<const double> steps, std::span<const double> errors);

double mean(std::span<const double> values);
double rms(std::span<const double> values);
double sample_stddev(std::span<const double> values);
double standard_error(std::span<const double> values);
double max_abs(std::span<const double> values);

}  // namespace jumpflow
