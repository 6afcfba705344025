#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hdp {

// A failure that should terminate a run with a specific process exit code:
//   2  configuration problems (parse errors, missing files, bad values)
//   3  numerical failures (divergence, non-finite results)
//   4  requests the tool recognizes but does not support
struct CliError {
  std::string code;    // machine-readable, e.g. "config.parse"
  std::string message; // human-readable detail
  int exit_code = 2;
};

struct PresetInfo {
  std::string name;
  std::string description;
  std::vector<std::string> params; // accepted "params" keys
};

// The built-in experiment catalog.
const std::vector<PresetInfo>& preset_catalog();

// Name of the environment variable that overrides the output directory
// when no --out flag is given.
const char* out_dir_env_var(); // "HDPOPT_OUT_DIR"

struct CliOptions {
  // One of: solve, classify, kl-fit, rate-fit, saddle-margin, check-grad,
  // preset.
  std::string action;
  std::string config_path;            // JSON config file; optional for preset
  std::string out_dir;                // overrides env var and config
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::string preset;                 // preset name (action "preset")
};

struct RunOutcome {
  std::string report_json;                // serialized report, also on disk
  std::string out_dir;                    // resolved output directory
  std::vector<std::string> files_written; // paths relative to out_dir
  double wall_seconds = 0.0;              // measured, never serialized
};

// Executes one action end to end and writes report.json plus any side
// files into the resolved output directory. Throws CliError on failure.
RunOutcome run_experiment(const CliOptions& opts);

// CLI wrapper: runs the experiment, prints a summary (including wall time)
// to `out` and errors to `err`, and returns the process exit code.
int run_cli(const CliOptions& opts, std::ostream& out, std::ostream& err);

} // namespace hdp
