#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jumpflow/report.hpp"
#include "jumpflow/scenario.hpp"
#include "jumpflow/types.hpp"

namespace jumpflow {

struct PipelineOutput {
  std::string name;
  std::vector<VerificationReport> reports;
  std::vector<std::filesystem::path> files;

  bool passed() const;
  const VerificationReport* failed_report() const;
  std::vector<std::string> warnings() const;
};

// simulate, verify-integral, verify-iw, kernel, forward, backward, duality,
// compare-mc
std::vector<std::string> pipeline_names();

// Runs one pipeline, or every pipeline into <out>/<name> for "all", writing
// CSV files and a report.txt that embeds the scenario configuration.
// Throws ScenarioError for an unknown name or an unsupported scenario.
std::vector<PipelineOutput> run_pipeline(const std::string& name, const Scenario& scenario,
                                         const std::filesystem::path& out,
                                         Exec exec = Exec::parallel);

// Snapshot table: x columns then one column per stored slice.
void write_snapshots(const std::filesystem::path& path, const GridField& field,
                     const std::vector<std::size_t>& slices);

// Indices of the slices nearest the requested times; first and last when
// `times` is empty.
std::vector<std::size_t> snapshot_slices(const std::vector<double>& stored,
                                         const std::vector<double>& times);

}  // namespace jumpflow
