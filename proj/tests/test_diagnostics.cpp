#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nlh/diagnostics.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace nlh;
using namespace nlh::test;

namespace {

GridSpec grid_of(std::size_t n, double L = 10.0) {
  GridSpec g;
  g.nx = n;
  g.length = L;
  g.dx = L / static_cast<double>(n);
  g.dt = g.dx;
  g.T = 1.0;
  return g;
}

// min over all half-cell axes of sum |u_i - u_(m - i)| / sum |u_i - mean|
double brute_reflection_residual(const Field& u) {
  const long n = static_cast<long>(u.size());
  double mean = 0.0;
  for (double v : u) mean += v;
  mean /= static_cast<double>(n);
  double dev = 0.0;
  for (double v : u) dev += std::abs(v - mean);
  double best = INFINITY;
  for (long m = 0; m < 2 * n; ++m) {
    double r = 0.0;
    for (long i = 0; i < n; ++i) r += std::abs(u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(((m - i) % n + n) % n)]);
    best = std::min(best, r);
  }
  return best / dev;
}

Field reversed(const Field& u) { return Field(u.rbegin(), u.rend()); }

Field rotated(const Field& u, std::size_t k) {
  Field out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[(i + k) % u.size()] = u[i];
  return out;
}

}  // namespace

TEST_CASE("step_error is the l1 norm of the difference") {
  const GridSpec g = grid_of(64);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Field a(64), b(64), diff(64);
    for (std::size_t i = 0; i < 64; ++i) {
      a[i] = d(rng);
      b[i] = d(rng);
      diff[i] = a[i] - b[i];
    }
    CHECK(step_error(a, b, g) == l1_norm(diff, g));
  }
  Field a(64, 1.5);
  CHECK(step_error(a, a, g) == 0.0);
  CHECK(l1_norm(a, g) == doctest::Approx(15.0));
}

TEST_CASE("series must advance by one time unit") {
  ErrorSeries s;
  s.append(1, 1e-3, 1e-14);
  CHECK_THROWS_AS(s.append(3, 1e-3, 1e-14), std::invalid_argument);
  s.append(2, 1e-15, 1e-14);
  REQUIRE(s.t0.has_value());
  CHECK(*s.t0 == 2);
  s.append(3, 1e-16, 1e-14);
  CHECK(*s.t0 == 2);
}

TEST_CASE("steady stop time uses the exact factor") {
  CHECK(steady_stop_time(100, 1.34) == 134);
  CHECK(steady_stop_time(1, 1.34) == 2);
  CHECK(steady_stop_time(50, 1.34) == 67);
  CHECK(steady_stop_time(6000, 1.34) == 8040);
  CHECK(steady_stop_time(7, 1.34) == 10);  // 9.38
}

TEST_CASE("check_stop") {
  const DiagnosticThresholds th;
  ErrorSeries s;
  for (std::int64_t t = 1; t <= 99; ++t) s.append(t, 1e-6, th.steady_threshold);
  CHECK(check_stop(s, 1000.0, th) == StopDecision::Continue);
  s.append(100, 1e-15, th.steady_threshold);
  for (std::int64_t t = 101; t < 134; ++t) {
    s.append(t, 1e-15, th.steady_threshold);
    CHECK(check_stop(s, 1000.0, th) == StopDecision::Continue);
  }
  s.append(134, 1e-15, th.steady_threshold);
  CHECK(check_stop(s, 1000.0, th) == StopDecision::SteadyStateStop);

  // the steady rule only applies when 1.34 * t0 is below the final time
  CHECK(check_stop(s, 134.0, th) == StopDecision::FinalTimeReached);
  CHECK(check_stop(s, 130.0, th) == StopDecision::FinalTimeReached);
}

TEST_CASE("check_stop never fires the steady rule before t0 exists") {
  const DiagnosticThresholds th;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> expo(-13.9, -2.0);
  ErrorSeries s;
  for (std::int64_t t = 1; t <= 5000; ++t) {
    s.append(t, std::pow(10.0, expo(rng)), th.steady_threshold);
    CHECK(check_stop(s, 1e9, th) == StopDecision::Continue);
  }
}

TEST_CASE("windowed local minima") {
  ErrorSeries s;
  for (std::int64_t t = 1; t <= 1000; ++t) {
    const double x = static_cast<double>(t);
    s.append(t, 1e-6 * (2.0 + std::cos(2.0 * std::numbers::pi * x / 400.0)), 1e-14);
  }
  // cos minima at t = 200, 600; window 201 needs 100 samples either side
  const auto m = find_local_minima(s, 201);
  CHECK(m == std::vector<std::int64_t>{200, 600});
  CHECK(find_local_minima(s, 1001).empty());
}

TEST_CASE("long trace: transient minimum then steady state") {
  const DiagnosticThresholds th;
  const ErrorSeries s = long_transient_trace();
  const MinimumClassification c = classify_minimum(s, th);
  REQUIRE(c.verdicts.size() == 2);
  CHECK(c.verdicts[0].kind == MinimumKind::Transient);
  CHECK(c.verdicts[0].t == 6000);
  CHECK(c.verdicts[1].kind == MinimumKind::SteadyState);
  CHECK(c.verdicts[1].t > 219000);
  CHECK(c.verdicts[1].t <= 220000);
  REQUIRE(c.steady_from.has_value());
  const NonConvergence band = detect_nonconvergence(s, th);
  CHECK_FALSE(band.flagged);
  CHECK(summarize_solution(c, band, StopReason::FinalTimeReached) == SolutionKind::SteadyState);

  // the online stop rule would have ended this run at 1.34 * t0
  ErrorSeries prefix;
  StopDecision d = StopDecision::Continue;
  for (const auto& x : s.samples) {
    prefix.append(x.t, x.e, th.steady_threshold);
    d = check_stop(prefix, 300000.0, th);
    if (d != StopDecision::Continue) break;
  }
  CHECK(d == StopDecision::SteadyStateStop);
  CHECK(prefix.last_time() == steady_stop_time(*prefix.t0, 1.34));
}

TEST_CASE("a dip that never recovers is not labelled transient") {
  const DiagnosticThresholds th;
  ErrorSeries s;
  for (std::int64_t t = 1; t <= 3000; ++t) {
    const double x = static_cast<double>(t);
    s.append(t, 1e-3 * std::exp(-x / 200.0) + 1e-10, th.steady_threshold);
  }
  const MinimumClassification c = classify_minimum(s, th);
  CHECK_FALSE(c.steady_from.has_value());
  for (const auto& v : c.verdicts) CHECK(v.kind != MinimumKind::Transient);
}

TEST_CASE("steady state needs a sample after t*") {
  const DiagnosticThresholds th;
  ErrorSeries s;
  for (std::int64_t t = 1; t < 10; ++t) s.append(t, 1e-5, th.steady_threshold);
  s.append(10, 1e-15, th.steady_threshold);
  CHECK_FALSE(classify_minimum(s, th).steady_from.has_value());
  s.append(11, 1e-15, th.steady_threshold);
  REQUIRE(classify_minimum(s, th).steady_from.has_value());
  CHECK(*classify_minimum(s, th).steady_from == 10);
}

TEST_CASE("a flat noisy band is non-convergent") {
  const DiagnosticThresholds th;
  const ErrorSeries s = band_trace(20000, 2e-4, 8e-4, 17);
  const NonConvergence band = detect_nonconvergence(s, th);
  CHECK(band.flagged);
  CHECK(band.band_min >= 2e-4);
  CHECK(band.band_max <= 8e-4);
  const MinimumClassification c = classify_minimum(s, th);
  CHECK(summarize_solution(c, band, StopReason::FinalTimeReached) == SolutionKind::NonConvergent);
}

TEST_CASE("slowly decaying error is not a band") {
  const DiagnosticThresholds th;
  ErrorSeries s;
  for (std::int64_t t = 1; t <= 10000; ++t) s.append(t, 1e-3 * std::exp(-static_cast<double>(t) / 2000.0), 1e-14);
  // last 30% spans 3000 time units: a decay of 0.65 decades
  CHECK_FALSE(detect_nonconvergence(s, th).flagged);
}

TEST_CASE("band and steady verdicts are mutually exclusive") {
  const DiagnosticThresholds th;
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> level(-16.0, -2.0);
  for (int trial = 0; trial < 200; ++trial) {
    ErrorSeries s;
    const double a = level(rng), b = level(rng);
    const int n = 300 + trial * 7;
    for (int t = 1; t <= n; ++t) {
      const double w = static_cast<double>(t) / n;
      const double jitter = 0.3 * std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      s.append(t, std::pow(10.0, a + (b - a) * w + jitter), th.steady_threshold);
    }
    const bool band = detect_nonconvergence(s, th).flagged;
    const bool steady = classify_minimum(s, th).steady_from.has_value();
    CHECK_FALSE((band && steady));
  }
}

TEST_CASE("symmetric profiles with 10 and 9 peaks") {
  const std::size_t n = 1280;
  const DiagnosticThresholds th;
  const Field even = mirrored_peaks(n, 10);
  const SymmetryReport re = classify_symmetry(even, th);
  CHECK(re.symmetry == Symmetry::Even);
  CHECK(re.peak_count == 10);
  CHECK(re.aggregation_count == 1);
  CHECK(symmetry_label(re) == "EVEN");

  const Field odd = mirrored_peaks(n, 9);
  const SymmetryReport ro = classify_symmetry(odd, th);
  CHECK(ro.symmetry == Symmetry::Odd);
  CHECK(ro.peak_count == 9);
  CHECK(symmetry_label(ro) == "ODD");
}

TEST_CASE("one-sided perturbation breaks symmetry") {
  const std::size_t n = 1280;
  const DiagnosticThresholds th;
  Field u = mirrored_peaks(n, 10);
  const double peak = *std::max_element(u.begin(), u.end());
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(0.0, 0.1 * peak);
  for (std::size_t i = 0; i < n / 2; ++i) u[i] += d(rng);
  const double r = brute_reflection_residual(u);
  CHECK(r > th.symmetry_tol);
  const SymmetryReport rep = classify_symmetry(u, th);
  CHECK(rep.symmetry == Symmetry::NonSymmetric);
  CHECK(rep.residual == doctest::Approx(r).epsilon(1e-12));
  CHECK(symmetry_label(rep) == "NON");
}

TEST_CASE("residual agrees with the brute-force axis search") {
  const std::size_t n = 96;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Field u(n);
    for (auto& v : u) v = d(rng);
    CHECK(classify_symmetry(u).residual == doctest::Approx(brute_reflection_residual(u)).epsilon(1e-12));
  }
}

TEST_CASE("symmetry verdict is invariant under rotation, reflection and affine scaling") {
  const std::size_t n = 640;
  for (int peaks : {9, 10}) {
    Field base = mirrored_peaks(n, peaks);
    const SymmetryReport ref = classify_symmetry(base);
    for (std::size_t k : {1u, 17u, 333u}) {
      const SymmetryReport r = classify_symmetry(rotated(base, k));
      CHECK(r.symmetry == ref.symmetry);
      CHECK(r.peak_count == ref.peak_count);
    }
    const SymmetryReport rr = classify_symmetry(reversed(base));
    CHECK(rr.symmetry == ref.symmetry);
    CHECK(rr.peak_count == ref.peak_count);
    for (auto [alpha, beta] : {std::pair{3.0, 0.0}, std::pair{0.25, 7.0}, std::pair{1.0, -1.5}}) {
      Field s = base;
      for (auto& v : s) v = alpha * v + beta;
      const SymmetryReport r = classify_symmetry(s);
      CHECK(r.symmetry == ref.symmetry);
      CHECK(r.peak_count == ref.peak_count);
    }
  }
  // non-symmetric profiles stay non-symmetric
  Field u = mirrored_peaks(n, 10);
  for (std::size_t i = 0; i < n / 3; ++i) u[i] *= 1.3;
  REQUIRE(classify_symmetry(u).symmetry == Symmetry::NonSymmetric);
  CHECK(classify_symmetry(rotated(u, 101)).symmetry == Symmetry::NonSymmetric);
  CHECK(classify_symmetry(reversed(u)).symmetry == Symmetry::NonSymmetric);
}

TEST_CASE("two separated aggregations") {
  const std::size_t n = 1280;
  const Field u = two_groups(n, 3);
  const SymmetryReport r = classify_symmetry(u);
  CHECK(r.aggregation_count == 2);
  CHECK(r.aggregation_peaks == std::vector<int>{3, 3});
  CHECK(r.peak_count == 6);
  CHECK(r.symmetry == Symmetry::Odd);
  CHECK(symmetry_label(r) == "2-ODD");
}

TEST_CASE("flat profile is homogeneous") {
  const Field u(100, 2.0);
  const SymmetryReport r = classify_symmetry(u);
  CHECK(r.symmetry == Symmetry::Even);
  CHECK(r.peak_count == 0);
}

TEST_CASE("classify_symmetry preconditions") {
  CHECK_THROWS_AS(classify_symmetry(Field(7, 1.0)), std::invalid_argument);
  Field u(16, 1.0);
  u[3] = NAN;
  CHECK_THROWS_AS(classify_symmetry(u), std::invalid_argument);
}

TEST_CASE("threshold validation") {
  DiagnosticThresholds th;
  CHECK_NOTHROW(th.validate());
  th.minimum_window = 200;
  CHECK_THROWS_AS(th.validate(), ConfigError);
  th = {};
  th.stop_factor = 0.5;
  CHECK_THROWS_AS(th.validate(), ConfigError);
}

TEST_CASE("a band shorter than the minimum window is not flagged") {
  const DiagnosticThresholds th;
  // tail of 600 samples is 180 < 201
  CHECK_FALSE(detect_nonconvergence(band_trace(600, 2e-4, 8e-4, 3), th).flagged);
  CHECK(detect_nonconvergence(band_trace(670, 2e-4, 8e-4, 3), th).flagged);
}
