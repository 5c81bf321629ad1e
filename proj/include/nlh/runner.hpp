#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlh/diagnostics.hpp"
#include "nlh/model.hpp"
#include "nlh/schemes.hpp"

namespace nlh {

enum class InitialKind { Sin02, Sin04, UniformRandom, Custom };

std::string_view to_string(InitialKind kind);

/// u(x, 0) = 2 + amplitude * shape(x), split evenly between u+ and u-:
///   Sin02:  0.5 + 0.5 sin(0.2 pi x)
///   Sin04:  0.5 + 0.5 sin(0.4 pi x)
///   UniformRandom: one draw in [0, 1) per cell
///   Custom: `profile` holds the total density per cell (amplitude unused).
struct InitialConditionSpec {
  InitialKind kind = InitialKind::Sin02;
  double amplitude = 2.5;
  std::uint64_t seed = 0;
  Field profile;
  /// Where `profile` was loaded from, if anywhere.
  std::string profile_path;

  bool operator==(const InitialConditionSpec&) const = default;
};

/// Uniform [0, 1) double from the top 53 bits of a 64-bit Mersenne Twister
/// draw; std::mt19937_64 output is fixed by the standard, so the stream is
/// identical on every platform.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed);
  double uniform();
  std::string serialize() const;
  static PortableRng deserialize(const std::string& text);

 private:
  PortableRng() = default;
  std::mt19937_64 engine_;
};

/// Cell-centre samples of the initial profile at x_i = i * dx.
PopulationState make_initial_state(const InitialConditionSpec& ic, const GridSpec& grid);

/// Reads a whitespace/comma separated list of total densities.
Field load_profile_file(const std::string& path);

struct RunConfig {
  ModelParams params;
  double dx = 0.0078125;
  double dt = 0.015625;
  double T = 10000.0;
  SchemeId scheme = SchemeId::Upwind;
  InitialConditionSpec ic;
  DiagnosticThresholds thresholds;
  /// Steps between checkpoints; 0 disables them.
  std::int64_t checkpoint_interval = 1'000'000;
  int threads = 1;
  /// Extra integer-or-fractional times at which to keep profile snapshots
  /// (0 and T/2 are always included).
  std::vector<double> snapshot_times;

  GridSpec grid() const;
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Canonical text of every field that affects the numerical result.
std::string canonical_config_text(const RunConfig& config);
/// 16 hex digits of FNV-1a over canonical_config_text.
std::string config_hash(const RunConfig& config);

struct Snapshot {
  double t = 0.0;
  PopulationState state;
  bool operator==(const Snapshot&) const = default;
};

struct HealthFlags {
  /// First step with any density below -1e-12.
  std::optional<std::int64_t> first_negative_step;
  double min_density = 0.0;
  bool non_finite = false;
  std::string abort_message;
  bool operator==(const HealthFlags&) const = default;
};

struct RunRecord {
  std::string config_hash;
  ErrorSeries series;
  MinimumClassification minima;
  NonConvergence band;
  SymmetryReport symmetry;
  RunVerdict verdict;
  PopulationState final_state;
  std::vector<Snapshot> snapshots;
  HealthFlags health;
  double initial_mass = 0.0;
  double final_mass = 0.0;
  std::int64_t steps = 0;
  double wall_seconds = 0.0;
  /// Kernel mass not captured by the truncated quadrature (r, a, al).
  double kernel_defects[3] = {0.0, 0.0, 0.0};
  /// False when the run was interrupted by RunOptions::max_steps.
  bool completed = true;

  double final_time(double dt) const { return static_cast<double>(final_state.time_index) * dt; }
};

struct RunOptions {
  /// Directory for checkpoint files; empty disables checkpoint writes.
  std::string checkpoint_dir;
  /// Resume from this checkpoint file instead of the initial condition.
  std::string resume_from;
  /// Stop (and checkpoint) after this many steps of the current invocation;
  /// negative = unlimited.
  std::int64_t max_steps = -1;
  /// Called after each E(t) sample.
  std::function<void(std::int64_t t, double e)> on_sample;
};

/// Integration step whose end time is the last step time <= t.
std::int64_t step_for_time(double t, double dt);

RunRecord run_simulation(const RunConfig& config, const RunOptions& options = {});

struct SweepPoint {
  double amplitude = 0.0;
  double dx = 0.0;
  double dt = 0.0;
  bool operator==(const SweepPoint&) const = default;
};

struct SweepRow {
  std::size_t index = 0;
  SweepPoint point;
  std::string config_hash;
  bool ok = false;
  std::string error;
  RunVerdict verdict;
  std::string label;
  double l1 = 0.0;
  double stop_time = 0.0;
};

/// Amplitudes a, a + step, ... <= b (inclusive, tolerant to round-off).
std::vector<double> amplitude_range(double first, double last, double step);

/// The amplitude set {0.001, 0.1, 0.2, ..., 36.0}.
std::vector<double> default_amplitude_set();

/// Runs every point (concurrently across `workers`) from the template config;
/// rows come back in input order and a failing run does not abort the sweep.
std::vector<SweepRow> sweep(const RunConfig& base, std::span<const SweepPoint> points,
                            int workers = 1,
                            const std::function<void(const SweepRow&)>& on_row = {});

}  // namespace nlh
