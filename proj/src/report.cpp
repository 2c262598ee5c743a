#include "jumpflow/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "jumpflow/errors.hpp"

namespace jumpflow {

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void VerificationReport::set_config(const std::string& key, const std::string& value) {
  for (auto& [k, v] : config) {
    if (k == key) {
      v = value;
      return;
    }
  }
  config.emplace_back(key, value);
}

void VerificationReport::set_config(const std::string& key, double value) {
  set_config(key, format_double(value));
}

void VerificationReport::add_metric(const std::string& name, double value) {
  for (auto& [k, v] : metrics) {
    if (k == name) {
      v = value;
      return;
    }
  }
  metrics.emplace_back(name, value);
}

bool VerificationReport::has_metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return true;
  }
  return false;
}

double VerificationReport::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  throw Error("report '" + title + "' has no metric '" + name + "'");
}

bool VerificationReport::check_le(const std::string& name, double value, double tolerance) {
  const bool ok = value <= tolerance;
  checks.push_back({name, value, tolerance, true, ok});
  return ok;
}

bool VerificationReport::check_ge(const std::string& name, double value, double tolerance) {
  const bool ok = value >= tolerance;
  checks.push_back({name, value, tolerance, false, ok});
  return ok;
}

bool VerificationReport::passed() const { return failed_check() == nullptr; }

const Check* VerificationReport::failed_check() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  os << "report: " << title << "\n";
  os << "[config]\n";
  for (const auto& [k, v] : config) os << k << ": " << v << "\n";
  os << "[metrics]\n";
  for (const auto& [k, v] : metrics) os << k << ": " << format_double(v) << "\n";
  os << "[checks]\n";
  for (const auto& c : checks) {
    os << c.name << ": " << (c.passed ? "pass" : "FAIL") << " value=" << format_double(c.value)
       << (c.upper ? " <= " : " >= ") << format_double(c.tolerance) << "\n";
  }
  if (!warnings.empty()) {
    os << "[warnings]\n";
    for (const auto& w : warnings) os << "warning: " << w << "\n";
  }
  os << "status: " << (passed() ? "pass" : "fail") << "\n";
  return os.str();
}

void VerificationReport::absorb(const VerificationReport& other, const std::string& prefix) {
  for (const auto& [k, v] : other.metrics) add_metric(prefix + "." + k, v);
  for (auto c : other.checks) {
    c.name = prefix + "." + c.name;
    checks.push_back(std::move(c));
  }
  for (const auto& w : other.warnings) warnings.push_back(prefix + ": " + w);
}

void write_residual_table(std::ostream& os, const std::vector<ResidualRow>& rows) {
  os << "seed,t,residual_cont,residual_jump\n";
  for (const auto& r : rows) {
    os << r.seed << ',' << format_double(r.t) << ',' << format_double(r.residual_cont) << ','
       << format_double(r.residual_jump) << '\n';
  }
}

}  // namespace jumpflow
