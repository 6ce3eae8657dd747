#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "kbkz/config.hpp"

namespace kbkz {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  exit_ok = 0,
  exit_config = 1,      // malformed config, usage error, or a model hypothesis that fails up front
  exit_breach = 2,      // hyperbolicity breach (aborted, or clamped and marked non-conforming)
  exit_divergence = 3,  // the time stepper blew up
  exit_check_failed = 4,  // kernel-check / invert-demo ran but a check did not pass
};

/// simulate: manifest.json, timing.json, config.ini, probes.csv, energy.csv, snapshot_NNN.csv.
int cmd_simulate(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// kernel-check: positivity.json, kernel.csv, psi.csv, monotonicity.csv, spectrum.csv,
/// inversion.csv.
int cmd_kernel_check(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// invert-demo: report.json, errors.csv, operator.csv.
int cmd_invert_demo(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);

/// Loads the config, sets the thread count (0 = leave as is) and dispatches; every library
/// exception is mapped to an exit code with a one-line message on `log`.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const std::filesystem::path& out, int threads, std::ostream& log);

}  // namespace kbkz
