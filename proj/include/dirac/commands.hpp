#pragma once

// Subcommands of the command-line front end. Each writes its artifacts into
// config.output_dir and returns a process exit code.

#include <functional>
#include <ostream>
#include <string>

#include "dirac/config.hpp"

namespace dirac {

enum ExitCode : int {
  exit_pass = 0,
  exit_check_failed = 1,
  exit_usage = 2,
  exit_resonance = 3,
};

/// bands.csv, band_edges.json
int cmd_bands(const RunConfig& config, std::ostream& log);
/// floquet.csv (period grid), floquet.json
int cmd_floquet(const RunConfig& config, double lambda, std::ostream& log);
/// potential.csv, schedule.csv, manifest.json
int cmd_synth(const RunConfig& config, std::ostream& log);
/// reports.json, summary.csv; exit 1 if any check fails
int cmd_verify(const RunConfig& config, const std::string& manifest_path, std::ostream& log);
/// oscillatory.json, oscillatory.csv
int cmd_oscillatory(const RunConfig& config, std::ostream& log);

/// Runs `body` and maps exceptions onto the exit-code contract, printing
/// the message to `log`.
int run_guarded(const std::function<int()>& body, std::ostream& log);

}  // namespace dirac
