#pragma once

#include "carleman/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace carleman {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitValidation = 2, kExitNumeric = 3 };

struct CliOptions {
  std::filesystem::path out_dir = "out";
  int workers = 1;
};

/// Runs one configured command and returns the paths written.
std::vector<std::filesystem::path> run_command(const RunConfig& cfg, const CliOptions& opts);

/// One evaluated point of a sweep: the axis values, then named metrics.
struct SweepRow {
  std::vector<double> axis_values;
  int status = kExitOk;
  std::string message;
  std::vector<double> metrics;
};

std::vector<std::string> sweep_metric_names();

/// Cartesian product of cfg.axes (first axis slowest), evaluated on up to
/// `workers` threads; rows come back in axis order.
std::vector<SweepRow> sweep(const RunConfig& cfg, int workers);

/// Worker count from the flag, else CARLEMAN_WORKERS, else hardware threads.
int resolve_workers(std::optional<int> flag);

/// Full command-line entry point; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace carleman
