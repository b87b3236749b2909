#pragma once

// Subcommands of robin-recon and the plumbing they share: run configuration
// loading, atomic artifact writes, SVG rendering and the validation suite.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robin/experiments.hpp"

namespace robin::cli {

struct EmitFlags {
  bool csv = true;
  bool json = true;
  bool svg = true;
};

/// Parses "csv,json,svg" (any non-empty subset). Throws std::invalid_argument.
EmitFlags parse_emit(const std::string& list);

struct SweepRow {
  double gamma = 0.0;
  double delta = 0.0;
  std::optional<double> shape_h;
};

struct RunConfig {
  ExperimentSpec experiment;
  std::filesystem::path out_dir = "out";
  EmitFlags emit;
  std::vector<SweepRow> sweep;
  int replication = 1;
};

/// Command-line values that take precedence over the configuration file.
struct Overrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<EmitFlags> emit;
};

/// Reads a JSON run configuration. Missing files, parse errors and unknown
/// keys throw std::invalid_argument with the path or key in the message.
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Ground truth and reconstruction overlaid against arclength.
std::string render_svg(const ExperimentReport& report);
void emit_svg(const ExperimentReport& report, const std::filesystem::path& path);

struct TableRowResult {
  SweepRow row;
  std::vector<ExperimentReport> runs;  // one per seed, in seed order
  std::string error;                   // empty on success
};

/// Runs every (row, seed) pair on up to `jobs` threads. Seeds are
/// base_seed, base_seed + 1, ... for `replication` draws.
std::vector<TableRowResult> run_sweep(const RunConfig& config, int jobs, std::ostream& log);

/// Aggregate CSV: medians over seeds, min/max of Err_l2, and a status column.
std::string table_csv(const std::vector<TableRowResult>& rows);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// FEM convergence probe, SPD checks, threshold formula and balancing replay.
std::vector<CheckResult> validation_checks();

int cmd_run(const std::filesystem::path& config, const Overrides& overrides, std::ostream& out, std::ostream& log);
int cmd_table(const std::filesystem::path& config, const Overrides& overrides, int jobs, std::ostream& out,
              std::ostream& log);
int cmd_validate(std::ostream& out, std::ostream& log);

}  // namespace robin::cli
