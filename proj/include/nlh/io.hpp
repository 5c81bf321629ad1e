#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlh/runner.hpp"

namespace nlh {

/// Bad command line. `exit_code` 0 means help/version output was requested
/// and `what()` holds that text.
class CliError : public std::runtime_error {
 public:
  CliError(const std::string& message, int exit_code) : std::runtime_error(message), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliRequest {
  RunConfig config;
  std::string out_dir = "out";
  std::string resume_from;
  /// Non-empty for a sweep; each point overrides amplitude, dx and dt.
  std::vector<SweepPoint> sweep_points;
  int workers = 1;
  std::int64_t max_steps = -1;
  /// Print "t E" every this many samples (0 = silent).
  std::int64_t log_every = 0;

  bool is_sweep() const { return !sweep_points.empty(); }
  bool operator==(const CliRequest&) const = default;
};

/// Parses argv-style arguments (without the program name).
CliRequest parse_cli(const std::vector<std::string>& args);

/// Arguments that parse back to exactly `request`.
std::vector<std::string> render_cli_args(const CliRequest& request);

/// Applies `key = value` lines (names: gamma, lambda1, lambda2,
/// y0, q_a, q_r, q_al, s_a, s_r, s_al, m_a, m_r, m_al, A, L). `#` starts a
/// comment. Ranges set without widths get width = range / 8.
void apply_params_file(const std::string& path, ModelParams& params);
void apply_param(const std::string& key, double value, ModelParams& params);

/// Output file names inside `<out_dir>/<hash>/`.
inline constexpr const char* kErrorSeriesFile = "error_series.csv";
inline constexpr const char* kProfileFile = "profile.csv";
inline constexpr const char* kVerdictFile = "verdict.json";
inline constexpr const char* kSweepFile = "sweep.csv";

/// Shortest-round-trip-safe 17 significant digit rendering.
std::string format_double(double v);

void write_error_series(const std::string& path, const std::string& hash, const ErrorSeries& series);
void write_profiles(const std::string& path, const std::string& hash, const std::vector<Snapshot>& snapshots,
                    const GridSpec& grid);
std::string verdict_json(const RunConfig& config, const RunRecord& record);
void write_verdict(const std::string& path, const RunConfig& config, const RunRecord& record);
void write_sweep_table(const std::string& path, const std::string& hash, const std::vector<SweepRow>& rows);

/// Writes error_series.csv, profile.csv and verdict.json under
/// `<out_dir>/<hash>/`, overwriting an earlier run of the same config.
/// Returns the directory.
std::string emit_run(const std::string& out_dir, const RunConfig& config, const RunRecord& record);

}  // namespace nlh
