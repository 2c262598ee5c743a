#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace jumpflow {

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool upper = true;  // value <= tolerance when true, value >= tolerance otherwise
  bool passed = false;
};

struct ResidualRow {
  std::uint64_t seed = 0;
  double t = 0.0;
  double residual_cont = 0.0;
  double residual_jump = 0.0;
};

// Residual statistics and pass/fail checks of one verification run. Every
// report carries the configuration that produced it.
struct VerificationReport {
  std::string title;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  std::vector<ResidualRow> residuals;

  void set_config(const std::string& key, const std::string& value);
  void set_config(const std::string& key, double value);
  void add_metric(const std::string& name, double value);
  bool has_metric(const std::string& name) const;
  double metric(const std::string& name) const;
  bool check_le(const std::string& name, double value, double tolerance);
  bool check_ge(const std::string& name, double value, double tolerance);
  void warn(std::string message) { warnings.push_back(std::move(message)); }
  bool passed() const;
  const Check* failed_check() const;

  // key: value blocks
  std::string to_text() const;
  // merge another report's metrics/checks under a name prefix
  void absorb(const VerificationReport& other, const std::string& prefix);
};

void write_residual_table(std::ostream& os, const std::vector<ResidualRow>& rows);

std::string format_double(double value);

}  // namespace jumpflow
