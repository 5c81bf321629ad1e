#include "nlh/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nlh {

void DiagnosticThresholds::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(transient_threshold > 0.0, "transient threshold must be positive");
  require(steady_threshold > 0.0, "steady threshold must be positive");
  require(stop_factor >= 1.0, "stop factor must be >= 1");
  require(minimum_window >= 3 && minimum_window % 2 == 1, "minimum window must be odd and >= 3");
  require(tail_fraction > 0.0 && tail_fraction <= 1.0, "tail fraction must be in (0, 1]");
  require(band_ratio >= 1.0, "band ratio must be >= 1");
  require(max_tail_decay >= 0.0, "tail decay threshold must be >= 0");
  require(symmetry_tol >= 0.0, "symmetry tolerance must be >= 0");
  require(peak_margin >= 0.0 && peak_margin < 1.0, "peak margin must be in [0, 1)");
  require(aggregation_gap > 0.0 && aggregation_gap < 1.0, "aggregation gap must be in (0, 1)");
}

double l1_norm(std::span<const double> u, const GridSpec& grid) {
  double sum = 0.0;
  for (double v : u) sum += std::abs(v);
  return grid.length / static_cast<double>(grid.nx) * sum;
}

double step_error(std::span<const double> now, std::span<const double> prev, const GridSpec& grid) {
  if (now.size() != prev.size()) throw std::invalid_argument("step_error: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) sum += std::abs(now[i] - prev[i]);
  return grid.length / static_cast<double>(grid.nx) * sum;
}

void ErrorSeries::append(std::int64_t t, double e, double steady_threshold) {
  if (!samples.empty() && t != samples.back().t + 1)
    throw std::invalid_argument("ErrorSeries: samples must advance by one time unit");
  samples.push_back({t, e});
  if (!t0 && e < steady_threshold) t0 = t;
}

std::int64_t steady_stop_time(std::int64_t t0, double stop_factor) {
  return static_cast<std::int64_t>(std::ceil(stop_factor * static_cast<double>(t0) - 1e-9));
}

StopDecision check_stop(const ErrorSeries& series, double final_time,
                        const DiagnosticThresholds& thresholds) {
  const auto t_final = static_cast<std::int64_t>(std::floor(final_time + 1e-9));
  const std::int64_t t = series.last_time();
  if (series.t0) {
    const std::int64_t t_star = steady_stop_time(*series.t0, thresholds.stop_factor);
    const double exact = thresholds.stop_factor * static_cast<double>(*series.t0);
    if (exact < final_time && t >= t_star) return StopDecision::SteadyStateStop;
  }
  if (t >= t_final) return StopDecision::FinalTimeReached;
  return StopDecision::Continue;
}

std::vector<std::int64_t> find_local_minima(const ErrorSeries& series, int window) {
  const auto& s = series.samples;
  const auto half = static_cast<std::size_t>(window / 2);
  std::vector<std::int64_t> minima;
  if (s.size() < static_cast<std::size_t>(window)) return minima;
  for (std::size_t i = half; i + half < s.size(); ++i) {
    const double e = s[i].e;
    bool is_min = true;
    // strictly below earlier samples, not above later ones: first of a tie wins
    for (std::size_t j = i - half; j < i && is_min; ++j) is_min = e < s[j].e;
    for (std::size_t j = i + 1; j <= i + half && is_min; ++j) is_min = e <= s[j].e;
    if (is_min) minima.push_back(s[i].t);
  }
  return minima;
}

MinimumClassification classify_minimum(const ErrorSeries& series,
                                       const DiagnosticThresholds& thresholds) {
  MinimumClassification out;
  const auto& s = series.samples;
  if (s.empty()) {
    out.diagnostic = "empty error series";
    return out;
  }

  // terminal run below the steady threshold
  std::size_t run_start = s.size();
  while (run_start > 0 && s[run_start - 1].e < thresholds.steady_threshold) --run_start;
  std::optional<std::size_t> steady_index;
  if (run_start + 1 < s.size()) {
    steady_index = run_start;
    out.steady_from = s[run_start].t;
  }

  // latest sample above the transient threshold
  std::optional<std::size_t> last_high;
  for (std::size_t i = s.size(); i > 0; --i) {
    if (s[i - 1].e > thresholds.transient_threshold) {
      last_high = i - 1;
      break;
    }
  }

  if (s.size() < static_cast<std::size_t>(thresholds.minimum_window)) {
    out.diagnostic = fmt::format("series too short for minimum detection ({} < {} samples)",
                                 s.size(), thresholds.minimum_window);
  }
  out.local_minima = find_local_minima(series, thresholds.minimum_window);

  const std::int64_t t_first = s.front().t;
  for (std::int64_t t : out.local_minima) {
    const auto idx = static_cast<std::size_t>(t - t_first);
    const double e = s[idx].e;
    if (e >= thresholds.transient_threshold) continue;
    if (last_high && *last_high > idx) {
      out.verdicts.push_back({t, e, MinimumKind::Transient});
    } else if (steady_index && idx >= *steady_index) {
      continue;  // part of the terminal steady plateau
    } else {
      out.verdicts.push_back({t, e, MinimumKind::Undetermined});
    }
  }
  if (steady_index) out.verdicts.push_back({s[*steady_index].t, s[*steady_index].e, MinimumKind::SteadyState});
  std::sort(out.verdicts.begin(), out.verdicts.end(),
            [](const MinimumVerdict& a, const MinimumVerdict& b) { return a.t < b.t; });
  return out;
}

NonConvergence detect_nonconvergence(const ErrorSeries& series,
                                     const DiagnosticThresholds& thresholds) {
  NonConvergence out;
  const auto& s = series.samples;
  const auto tail = static_cast<std::size_t>(
      std::ceil(thresholds.tail_fraction * static_cast<double>(s.size())));
  // a band has to persist for at least one minimum window
  if (tail < 3 || tail < static_cast<std::size_t>(thresholds.minimum_window)) return out;
  const auto first = s.end() - static_cast<std::ptrdiff_t>(tail);

  out.band_min = std::numeric_limits<double>::infinity();
  out.band_max = 0.0;
  for (auto it = first; it != s.end(); ++it) {
    out.band_min = std::min(out.band_min, it->e);
    out.band_max = std::max(out.band_max, it->e);
  }
  if (!(out.band_min > thresholds.transient_threshold)) return out;

  // least-squares slope of log10 E against t
  double mean_t = 0.0, mean_y = 0.0;
  for (auto it = first; it != s.end(); ++it) {
    mean_t += static_cast<double>(it->t);
    mean_y += std::log10(it->e);
  }
  mean_t /= static_cast<double>(tail);
  mean_y /= static_cast<double>(tail);
  double sxy = 0.0, sxx = 0.0;
  for (auto it = first; it != s.end(); ++it) {
    const double dt = static_cast<double>(it->t) - mean_t;
    sxy += dt * (std::log10(it->e) - mean_y);
    sxx += dt * dt;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  out.tail_trend = slope * static_cast<double>(s.back().t - first->t);

  out.flagged = out.band_max / out.band_min <= thresholds.band_ratio &&
                out.tail_trend >= -thresholds.max_tail_decay;
  return out;
}

SolutionKind summarize_solution(const MinimumClassification& minima, const NonConvergence& band,
                                StopReason stop) {
  if (minima.steady_from) return SolutionKind::SteadyState;
  if (band.flagged && stop == StopReason::FinalTimeReached) return SolutionKind::NonConvergent;
  const bool transient = std::any_of(minima.verdicts.begin(), minima.verdicts.end(),
                                     [](const MinimumVerdict& v) { return v.kind == MinimumKind::Transient; });
  return transient ? SolutionKind::TransientOnly : SolutionKind::Undetermined;
}

namespace {

struct Peak {
  std::size_t pos;
  double value;
};

// Smallest value strictly between cells a and b walking forward (cyclic).
double trough_between(std::span<const double> u, std::size_t a, std::size_t b) {
  const std::size_t n = u.size();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = (a + 1) % n; i != b; i = (i + 1) % n) lo = std::min(lo, u[i]);
  return std::isfinite(lo) ? lo : std::min(u[a], u[b]);
}

// Plateau-aware local maxima (runs of values equal within eps count once),
// above `floor`, then pruned until every neighbouring pair is separated by a
// trough at least `margin` deep.
std::vector<Peak> find_peaks(std::span<const double> u, double eps, double floor, double margin) {
  const std::size_t n = u.size();
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(u[i] - u[(i + n - 1) % n]) > eps) {
      start = i;
      break;
    }
  }
  if (start == n) return {};

  struct Run {
    std::size_t first;
    std::size_t length;
    double value;
  };
  std::vector<Run> runs;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (start + k) % n;
    if (k > 0 && std::abs(u[i] - u[(i + n - 1) % n]) <= eps) {
      runs.back().length += 1;
      runs.back().value = std::max(runs.back().value, u[i]);
    } else {
      runs.push_back({i, 1, u[i]});
    }
  }

  std::vector<Peak> peaks;
  const std::size_t r = runs.size();
  for (std::size_t k = 0; k < r; ++k) {
    const Run& cur = runs[k];
    const Run& prev = runs[(k + r - 1) % r];
    const Run& next = runs[(k + 1) % r];
    const bool is_max = r == 1 || (cur.value > prev.value && cur.value > next.value);
    if (is_max && cur.value > floor) peaks.push_back({(cur.first + cur.length / 2) % n, cur.value});
  }

  while (peaks.size() >= 2) {
    std::size_t worst = 0;
    double worst_score = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < peaks.size(); ++k) {
      const Peak& a = peaks[k];
      const Peak& b = peaks[(k + 1) % peaks.size()];
      double col = trough_between(u, a.pos, b.pos);
      if (peaks.size() == 2) col = std::max(col, trough_between(u, b.pos, a.pos));
      const double score = std::min(a.value, b.value) - col;
      if (score < worst_score) {
        worst_score = score;
        worst = k;
      }
    }
    if (worst_score >= margin) break;
    const std::size_t other = (worst + 1) % peaks.size();
    const std::size_t drop = peaks[worst].value < peaks[other].value ? worst : other;
    peaks.erase(peaks.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.pos < b.pos; });
  return peaks;
}

// Peak counts per aggregation. Aggregations are separated by runs of
// near-baseline cells at least `min_gap` cells wide.
std::vector<int> aggregation_peaks(std::span<const double> u, const std::vector<Peak>& peaks,
                                   double baseline_level, std::size_t min_gap) {
  const std::size_t n = u.size();
  if (peaks.empty()) return {};
  std::vector<bool> gap(n, false);
  std::vector<bool> low(n);
  for (std::size_t i = 0; i < n; ++i) low[i] = u[i] <= baseline_level;

  // mark low runs that are wide enough; handle wrap by starting after a high cell
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!low[i]) {
      start = (i + 1) % n;
      break;
    }
  }
  if (start == n) return {static_cast<int>(peaks.size())};
  for (std::size_t k = 0; k < n;) {
    const std::size_t i = (start + k) % n;
    if (!low[i]) {
      ++k;
      continue;
    }
    std::size_t len = 0;
    while (k + len < n && low[(start + k + len) % n]) ++len;
    if (len >= min_gap)
      for (std::size_t j = 0; j < len; ++j) gap[(start + k + j) % n] = true;
    k += len;
  }

  // walk from the start of the first gap and count peaks per non-gap segment
  std::size_t origin = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (gap[i]) {
      origin = i;
      break;
    }
  }
  if (origin == n) return {static_cast<int>(peaks.size())};
  std::vector<bool> is_peak(n, false);
  for (const Peak& p : peaks) is_peak[p.pos] = true;

  std::vector<int> counts;
  bool inside = false;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (origin + k) % n;
    if (gap[i]) {
      inside = false;
      continue;
    }
    if (!inside) {
      counts.push_back(0);
      inside = true;
    }
    if (is_peak[i]) counts.back() += 1;
  }
  std::erase(counts, 0);
  return counts;
}

}  // namespace

SymmetryReport classify_symmetry(std::span<const double> u, const DiagnosticThresholds& th) {
  const std::size_t n = u.size();
  if (n < 8) throw std::invalid_argument("classify_symmetry: need at least 8 cells");
  for (double v : u)
    if (!std::isfinite(v)) throw std::invalid_argument("classify_symmetry: non-finite profile");

  SymmetryReport report;
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(n);
  double dev = 0.0, mass = 0.0;
  for (double v : u) {
    dev += std::abs(v - mean);
    mass += std::abs(v);
  }
  if (dev < 1e-12 * mass) {
    report.symmetry = Symmetry::Even;
    return report;
  }

  // reflection about axis c = m/2 maps cell i to (m - i) mod n
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_m = 0;
  for (std::size_t m = 0; m < 2 * n; ++m) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (m + 2 * n - i) % n;
      r += std::abs(u[i] - u[j]);
    }
    if (r < best) {
      best = r;
      best_m = m;
    }
  }
  report.residual = best / dev;
  report.axis = 0.5 * static_cast<double>(best_m);

  const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
  const double lo = *lo_it, hi = *hi_it;
  const double margin = th.peak_margin * (hi - lo);
  const std::vector<Peak> peaks = find_peaks(u, 1e-9 * (hi - lo), lo + margin, margin);
  for (const Peak& p : peaks) report.peaks.push_back(p.pos);
  report.peak_count = static_cast<int>(peaks.size());

  const auto min_gap = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(th.aggregation_gap * static_cast<double>(n))));
  report.aggregation_peaks = aggregation_peaks(u, peaks, lo + 0.1 * (mean - lo), min_gap);
  report.aggregation_count = static_cast<int>(report.aggregation_peaks.size());

  if (report.residual > th.symmetry_tol) {
    report.symmetry = Symmetry::NonSymmetric;
    return report;
  }
  int parity_count = report.peak_count;
  if (!report.aggregation_peaks.empty()) {
    const int first = report.aggregation_peaks.front() % 2;
    const bool uniform = std::all_of(report.aggregation_peaks.begin(), report.aggregation_peaks.end(),
                                     [&](int c) { return c % 2 == first; });
    if (uniform) parity_count = report.aggregation_peaks.front();
  }
  report.symmetry = parity_count % 2 == 1 ? Symmetry::Odd : Symmetry::Even;
  return report;
}

std::string_view to_string(StopReason r) {
  return r == StopReason::SteadyStateStop ? "SteadyStateStop" : "FinalTimeReached";
}

std::string_view to_string(SolutionKind k) {
  switch (k) {
    case SolutionKind::TransientOnly: return "TransientOnly";
    case SolutionKind::SteadyState: return "SteadyState";
    case SolutionKind::NonConvergent: return "NonConvergent";
    case SolutionKind::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

std::string_view to_string(Symmetry s) {
  switch (s) {
    case Symmetry::Odd: return "Odd";
    case Symmetry::Even: return "Even";
    case Symmetry::NonSymmetric: return "NonSymmetric";
  }
  return "NonSymmetric";
}

std::string_view to_string(MinimumKind k) {
  switch (k) {
    case MinimumKind::Transient: return "Transient";
    case MinimumKind::SteadyState: return "SteadyState";
    case MinimumKind::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

std::string symmetry_label(const SymmetryReport& report) {
  std::string base;
  switch (report.symmetry) {
    case Symmetry::Odd: base = "ODD"; break;
    case Symmetry::Even: base = "EVEN"; break;
    case Symmetry::NonSymmetric: return "NON";
  }
  if (report.aggregation_count >= 2) return fmt::format("{}-{}", report.aggregation_count, base);
  return base;
}

}  // namespace nlh
