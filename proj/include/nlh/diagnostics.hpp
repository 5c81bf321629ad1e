#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlh/model.hpp"

namespace nlh {

/// Thresholds and knobs of the stop / classification pipeline.
struct DiagnosticThresholds {
  double transient_threshold = 1e-8;
  double steady_threshold = 1e-14;
  /// Stop at the first integer time >= stop_factor * t0.
  double stop_factor = 1.34;
  /// Width (in integer-time samples) of the centred window used to detect
  /// local minima of E(t). Must be odd.
  int minimum_window = 201;
  double tail_fraction = 0.3;
  double band_ratio = 10.0;
  /// The tail must also hold at least `minimum_window` samples.
  /// Largest fitted decay (in decades of E across the tail) still treated as
  /// a stationary band.
  double max_tail_decay = 0.25;
  double symmetry_tol = 1e-3;
  /// Peak height above the minimum, and prominence, as a fraction of max - min.
  double peak_margin = 1e-2;
  /// Minimum width of a near-baseline gap separating two aggregations, as a
  /// fraction of the number of cells.
  double aggregation_gap = 0.05;

  void validate() const;
  bool operator==(const DiagnosticThresholds&) const = default;
};

/// (L / Nx) * sum |u_i|.
double l1_norm(std::span<const double> u, const GridSpec& grid);

/// (L / Nx) * sum |now_i - prev_i|.
double step_error(std::span<const double> now, std::span<const double> prev, const GridSpec& grid);

struct ErrorSample {
  std::int64_t t = 0;
  double e = 0.0;
  bool operator==(const ErrorSample&) const = default;
};

/// E(t) sampled at consecutive integer times.
struct ErrorSeries {
  std::vector<ErrorSample> samples;
  /// First time with E < steady threshold.
  std::optional<std::int64_t> t0;
  std::vector<std::int64_t> local_minima;

  /// Appends E(t); t must be exactly one past the previous sample.
  void append(std::int64_t t, double e, double steady_threshold);
  bool empty() const { return samples.empty(); }
  std::int64_t last_time() const { return samples.empty() ? 0 : samples.back().t; }

  bool operator==(const ErrorSeries&) const = default;
};

enum class StopReason { FinalTimeReached, SteadyStateStop };
enum class StopDecision { Continue, FinalTimeReached, SteadyStateStop };

/// First integer time >= stop_factor * t0.
std::int64_t steady_stop_time(std::int64_t t0, double stop_factor);

/// Stop criteria evaluated at the latest sample of `series`.
StopDecision check_stop(const ErrorSeries& series, double final_time,
                        const DiagnosticThresholds& thresholds = {});

enum class MinimumKind { Transient, SteadyState, Undetermined };

struct MinimumVerdict {
  std::int64_t t = 0;
  double e = 0.0;
  MinimumKind kind = MinimumKind::Undetermined;
  bool operator==(const MinimumVerdict&) const = default;
};

struct MinimumClassification {
  std::vector<MinimumVerdict> verdicts;
  std::vector<std::int64_t> local_minima;
  /// Start of the terminal run of samples below the steady threshold.
  std::optional<std::int64_t> steady_from;
  std::string diagnostic;
};

/// Windowed local minima of E(t).
std::vector<std::int64_t> find_local_minima(const ErrorSeries& series, int window);

/// Labels each sub-transient-threshold minimum of E(t):
///  - Transient: E dips below the transient threshold, then later rises above it;
///  - SteadyState: E stays below the steady threshold from t* to the last sample
///    (at least one sample after t*);
///  - Undetermined otherwise.
MinimumClassification classify_minimum(const ErrorSeries& series,
                                       const DiagnosticThresholds& thresholds = {});

struct NonConvergence {
  bool flagged = false;
  double band_min = 0.0;
  double band_max = 0.0;
  /// Fitted change of log10 E across the tail (negative = decaying).
  double tail_trend = 0.0;
};

/// Flags a trailing band of E(t) that neither decays nor drops below the
/// transient threshold.
NonConvergence detect_nonconvergence(const ErrorSeries& series,
                                     const DiagnosticThresholds& thresholds = {});

enum class SolutionKind { TransientOnly, SteadyState, NonConvergent, Undetermined };

SolutionKind summarize_solution(const MinimumClassification& minima, const NonConvergence& band,
                                StopReason stop);

enum class Symmetry { Odd, Even, NonSymmetric };

struct SymmetryReport {
  Symmetry symmetry = Symmetry::NonSymmetric;
  int peak_count = 0;
  int aggregation_count = 0;
  /// min over axes of ||u(x) - u(2c - x)||_1 / ||u - mean||_1.
  double residual = 0.0;
  /// Best reflection axis in cell units, in [0, nx).
  double axis = 0.0;
  std::vector<std::size_t> peaks;
  /// Peak count of each aggregation, in order of position.
  std::vector<int> aggregation_peaks;
};

/// Reflection-symmetry verdict for a periodic profile. Parity follows the
/// per-aggregation peak count: odd -> Odd, even -> Even.
SymmetryReport classify_symmetry(std::span<const double> u,
                                 const DiagnosticThresholds& thresholds = {});

std::string_view to_string(StopReason r);
std::string_view to_string(SolutionKind k);
std::string_view to_string(Symmetry s);
std::string_view to_string(MinimumKind k);

/// Short label: "EVEN", "ODD", "NON", or e.g. "2-ODD".
std::string symmetry_label(const SymmetryReport& report);

struct RunVerdict {
  StopReason stop_reason = StopReason::FinalTimeReached;
  SolutionKind solution_kind = SolutionKind::Undetermined;
  Symmetry symmetry = Symmetry::NonSymmetric;
  int peak_count = 0;
  int aggregation_count = 0;
  bool operator==(const RunVerdict&) const = default;
};

}  // namespace nlh
