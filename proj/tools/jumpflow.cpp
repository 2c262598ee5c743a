// jumpflow command-line driver.
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "jumpflow/errors.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/pipelines.hpp"
#include "jumpflow/scenario.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kToleranceFailure = 1;
constexpr int kInputError = 2;

struct Options {
  std::string scenario;
  long long seed = -1;
  std::string out;
  int threads = 0;
  bool strict = false;
  bool serial = false;
};

int run(const std::string& command, const Options& opt) {
  using namespace jumpflow;
  Scenario scenario = load_scenario(opt.scenario);
  if (opt.seed >= 0) {
    scenario.seed = static_cast<std::uint64_t>(opt.seed);
    for (auto& [k, v] : scenario.echo) {
      if (k == "seeds.base") v = std::to_string(scenario.seed);
    }
  }
  if (opt.threads > 0) set_thread_count(opt.threads);
  const std::filesystem::path out = opt.out.empty() ? scenario.out_dir : opt.out;

  const auto results = run_pipeline(command, scenario, out, opt.serial ? Exec::serial : Exec::parallel);
  int status = kPass;
  for (const auto& r : results) {
    for (const auto& report : r.reports) {
      for (const auto& c : report.checks) {
        if (c.passed) continue;
        std::fprintf(stderr, "FAIL %s: check '%s' value=%s %s %s\n", report.title.c_str(), c.name.c_str(),
                     format_double(c.value).c_str(), c.upper ? "<=" : ">=", format_double(c.tolerance).c_str());
        status = kToleranceFailure;
      }
    }
    for (const auto& w : r.warnings()) {
      std::fprintf(stderr, "%s %s\n", opt.strict ? "FAIL warning (strict):" : "warning:", w.c_str());
      if (opt.strict) status = kToleranceFailure;
    }
    std::printf("%s: %s (%s)\n", r.name.c_str(), r.passed() ? "pass" : "fail",
                (out / (command == "all" ? r.name : "") / "report.txt").lexically_normal().c_str());
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification driver for jump-diffusion flows, kernels and Kolmogorov equations"};
  app.require_subcommand(1);
  Options opt;
  std::string command;
  for (const auto& name : jumpflow::pipeline_names()) app.add_subcommand(name, "run the " + name + " pipeline");
  app.add_subcommand("all", "run every pipeline into <out>/<name>");
  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--scenario", opt.scenario, "scenario YAML file")->required();
    sub->add_option("--seed", opt.seed, "base seed, overrides seeds.base")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opt.out, "output directory, overrides output.dir");
    sub->add_option("--threads", opt.threads, "OpenMP thread count")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", opt.strict, "treat warnings as failures");
    sub->add_flag("--serial", opt.serial, "use the serial reference kernels");
    sub->callback([&command, sub] { command = sub->get_name(); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInputError;
  }
  try {
    return run(command, opt);
  } catch (const jumpflow::ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const jumpflow::CflError& e) {
    std::fprintf(stderr, "error: field 'time.steps': %s\n", e.what());
    return kInputError;
  } catch (const jumpflow::InvalidModelError& e) {
    std::fprintf(stderr, "error: field 'model': %s\n", e.what());
    return kInputError;
  } catch (const jumpflow::WrongVariantError& e) {
    std::fprintf(stderr, "error: field 'model': %s\n", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "FAIL %s: %s\n", command.c_str(), e.what());
    return kToleranceFailure;
  }
}
