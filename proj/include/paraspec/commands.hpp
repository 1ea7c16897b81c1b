#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "paraspec/config.hpp"

namespace paraspec {

inline constexpr const char* kCodeVersion = "0.1.0";

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;
  int workers = 1;
};

struct CommandOutput {
  std::vector<std::string> files;    // written data files, relative to the run directory
  std::vector<std::string> caveats;
};

// Each command writes its artifacts into ctx.out plus the canonical config.ini,
// and updates run.json (the only file carrying wall time).
CommandOutput cmd_simulate(const RunContext& ctx);    // orbits.csv
CommandOutput cmd_correlate(const RunContext& ctx);   // correlation.csv
CommandOutput cmd_conditions(const RunContext& ctx);  // conditions.json
CommandOutput cmd_spectrum(const RunContext& ctx);    // spectrum.csv, partial_norm.csv, envelope.csv, spectrum.json, SVGs
// report.md from the artifacts in run_dir. Throws MissingArtifact.
CommandOutput cmd_report(const std::filesystem::path& run_dir);

// Maps an exception to the CLI exit code (2 config, 3 numerical, 1 other).
int exit_code_for(const std::exception& e);

}  // namespace paraspec
