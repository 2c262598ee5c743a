#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jumpflow/grid.hpp"
#include "jumpflow/noise.hpp"
#include "jumpflow/registry.hpp"

namespace jumpflow {

// Parse or validation failure with the offending location.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& field, int line, const std::string& message)
      : std::runtime_error(format(field, line, message)), field_(field), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& message) {
    return (line > 0 ? "line " + std::to_string(line) + ", " : std::string()) + "field '" + field +
           "': " + message;
  }
  std::string field_;
  int line_;
};

struct InitialSpec {
  std::string kind = "gaussian";  // gaussian | delta
  std::vector<double> mean;
  double variance = 0.25;
};

struct Scenario {
  std::string name = "scenario";
  ModelSpec model;

  double t0 = 0.0;
  double T = 1.0;
  int steps = 0;  // 0: CFL-automatic where a spatial grid is involved, else 1000
  int refinement_levels = 0;

  double lo = -5.0;
  double hi = 5.0;
  int points = 512;

  std::uint64_t seed = 1;
  int seed_count = 1;

  std::vector<double> x0;
  InitialSpec initial;
  std::string candidate = "registry";  // registry | coordinate

  std::string iw_field = "linear";  // linear | sine
  double iw_q = 0.0;
  double iw_d = 0.0;

  std::vector<std::string> phi = {"x", "cos"};  // backward terminal data
  double s_fraction = 0.5;                      // Chapman midpoint as a fraction of [t0, T]
  int bin_cells = 8;

  std::size_t mc_paths = 100000;
  int mc_bins = 64;
  std::size_t mc_samples = 10000;  // kernel global-invariant samples
  int kernel_members = 0;          // > 0 also runs the expectation link

  std::vector<double> snapshot_times;  // empty: initial and final only

  std::map<std::string, double> tolerances;
  std::string pipeline;  // default subcommand for `all`-less invocations
  std::string out_dir = "out";

  // Resolved configuration, one "key: value" per entry, in file order.
  std::vector<std::pair<std::string, std::string>> echo;

  SpatialGrid space() const;
  Vec start() const;
  double tolerance(const std::string& key, double fallback) const;
  bool has_tolerance(const std::string& key) const { return tolerances.count(key) != 0; }
};

// Keys accepted in the tolerances section.
std::vector<std::string> tolerance_keys();

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text);

}  // namespace jumpflow
