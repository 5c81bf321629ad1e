#pragma once

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "nlh/model.hpp"
#include "nlh/schemes.hpp"

namespace nlh::test {

/// Upwind transport with the trapezoidal source average, written out
/// directly: the update a zero-slope quasi-steady scheme must reduce to.
inline PopulationState upwind_averaged_source(const PopulationState& u, const ModelParams& p, const GridSpec& g,
                                              const KernelTable& k) {
  const SourceField s = compute_sources(u, k, p);
  const std::size_t n = u.size();
  const double nu = p.gamma * g.dt / g.dx;
  const double half = 0.5 * g.dt;
  PopulationState out;
  out.u_plus.resize(n);
  out.u_minus.resize(n);
  out.time_index = u.time_index + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l = (i + n - 1) % n;
    const std::size_t r = (i + 1) % n;
    out.u_plus[i] = u.u_plus[i] - nu * (u.u_plus[i] - u.u_plus[l]) + half * (s.s_plus[i] + s.s_plus[l]);
    out.u_minus[i] = u.u_minus[i] + nu * (u.u_minus[r] - u.u_minus[i]) + half * (s.s_minus[r] + s.s_minus[i]);
  }
  return out;
}

/// L1 error after advecting u+ = 1 + 0.5 sin(2 pi x / L), u- = 1 + 0.5 cos(2 pi x / L)
/// with all turning switched off, against the exact translated profiles.
inline double advection_error(SchemeId scheme, double dx, double courant, double T) {
  ModelParams p;
  p.lambda1 = 0.0;
  p.lambda2 = 0.0;
  const double dt = courant * dx / p.gamma;
  const GridSpec g = GridSpec::make(p, dx, dt, T);
  const KernelTable k = build_kernel_table(p, g);
  const double w = 2.0 * std::numbers::pi / p.L;
  PopulationState s;
  s.u_plus.resize(g.nx);
  s.u_minus.resize(g.nx);
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double x = g.cell_center(i);
    s.u_plus[i] = 1.0 + 0.5 * std::sin(w * x);
    s.u_minus[i] = 1.0 + 0.5 * std::cos(w * x);
  }
  for (std::int64_t n = 0; n < g.nt; ++n) s = step(scheme, s, p, g, k);
  const double t = static_cast<double>(g.nt) * dt;
  double err = 0.0;
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double x = g.cell_center(i);
    err += std::abs(s.u_plus[i] - (1.0 + 0.5 * std::sin(w * (x - p.gamma * t))));
    err += std::abs(s.u_minus[i] - (1.0 + 0.5 * std::cos(w * (x + p.gamma * t))));
  }
  return err * dx;
}

// Straight double loop over cells and offsets, Simpson weights built inline.
struct BruteSignals {
  std::vector<long double> y_plus;
  std::vector<long double> y_minus;
};

inline long double kernel_ld(long double s, long double range, long double width) {
  const long double z = (s - range) / width;
  return std::exp(-0.5L * z * z) / std::sqrt(2.0L * std::numbers::pi_v<long double> * width * width);
}

inline BruteSignals brute_force_signals(const PopulationState& st, const ModelParams& p, double dx) {
  const long n = static_cast<long>(st.size());
  auto at = [n](const Field& f, long i) { return static_cast<long double>(f[static_cast<std::size_t>(((i % n) + n) % n)]); };
  auto simpson_sum = [&](double range, double width, long i, int which) {
    const long N = 2 * std::lround(range / dx);
    long double acc = 0.0L;
    for (long k = 0; k <= N; ++k) {
      const long double c = (k == 0 || k == N) ? 1.0L : (k % 2 ? 4.0L : 2.0L);
      const long double w = c * dx / 3.0L * kernel_ld(k * static_cast<long double>(dx), range, width);
      long double diff;
      const long double total_fwd = at(st.u_plus, i + k) + at(st.u_minus, i + k);
      const long double total_bwd = at(st.u_plus, i - k) + at(st.u_minus, i - k);
      switch (which) {
        case 0: diff = total_fwd - total_bwd; break;
        case 1: diff = at(st.u_minus, i + k) - at(st.u_plus, i - k); break;
        case 2: diff = total_bwd - total_fwd; break;
        default: diff = at(st.u_plus, i - k) - at(st.u_minus, i + k); break;
      }
      acc += w * diff;
    }
    return acc;
  };
  BruteSignals out;
  for (long i = 0; i < n; ++i) {
    const long double yr = simpson_sum(p.s_r, p.m_r, i, 0);
    const long double ya = simpson_sum(p.s_a, p.m_a, i, 0);
    const long double yal = simpson_sum(p.s_al, p.m_al, i, 1);
    out.y_plus.push_back(p.q_r * yr - p.q_a * ya + p.q_al * yal);
    const long double zr = simpson_sum(p.s_r, p.m_r, i, 2);
    const long double za = simpson_sum(p.s_a, p.m_a, i, 2);
    const long double zal = simpson_sum(p.s_al, p.m_al, i, 3);
    out.y_minus.push_back(p.q_r * zr - p.q_a * za + p.q_al * zal);
  }
  return out;
}

// max-norm error relative to the max-norm of the reference
inline double rel_error(const Field& got, const std::vector<long double>& want) {
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num = std::max(num, std::abs(static_cast<long double>(got[i]) - want[i]));
    den = std::max(den, std::abs(want[i]));
  }
  return static_cast<double>(num / den);
}

}  // namespace nlh::test
