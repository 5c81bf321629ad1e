#include "nlh/schemes.hpp"

#include <cmath>
#include <fmt/format.h>

namespace nlh {

namespace {

struct NameEntry {
  SchemeId id;
  std::string_view name;
};

constexpr std::array<NameEntry, 10> kNames = {{
    {SchemeId::Upwind, "upwind"},
    {SchemeId::MacCormack, "maccormack"},
    {SchemeId::FSM, "fsm"},
    {SchemeId::QSA, "qsa"},
    {SchemeId::QSA_Center, "qsa_center"},
    {SchemeId::QSA_BW, "qsa_bw"},
    {SchemeId::QSA_LW, "qsa_lw"},
    {SchemeId::QSA_Minmod, "qsa_minmod"},
    {SchemeId::QSA_Superbee, "qsa_superbee"},
    {SchemeId::QSA_MC, "qsa_mc"},
}};

bool same_sign(double a, double b) { return (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0); }

// Periodic neighbours.
struct Ring {
  std::size_t n;
  std::size_t prev(std::size_t i) const { return i == 0 ? n - 1 : i - 1; }
  std::size_t next(std::size_t i) const { return i + 1 == n ? 0 : i + 1; }
};

// Upwind transport of both families, optionally followed by dt * source.
PopulationState upwind_stage(const PopulationState& u, const SourceField* src, double nu,
                             double dt) {
  const Ring ring{u.size()};
  PopulationState out;
  out.u_plus.resize(ring.n);
  out.u_minus.resize(ring.n);
  out.time_index = u.time_index;
  for (std::size_t i = 0; i < ring.n; ++i) {
    const std::size_t im = ring.prev(i);
    const std::size_t ip = ring.next(i);
    double up = u.u_plus[i] - nu * (u.u_plus[i] - u.u_plus[im]);
    double um = u.u_minus[i] + nu * (u.u_minus[ip] - u.u_minus[i]);
    if (src != nullptr) {
      up += dt * src->s_plus[i];
      um += dt * src->s_minus[i];
    }
    out.u_plus[i] = up;
    out.u_minus[i] = um;
  }
  return out;
}

PopulationState step_upwind(const PopulationState& u, const ModelParams& p, const GridSpec& g,
                            const KernelTable& k, int threads) {
  const SourceField src = compute_sources(u, k, p, threads);
  return upwind_stage(u, &src, p.gamma * g.dt / g.dx, g.dt);
}

// Upwind predictor, downwind corrector evaluated at the predicted state, then
// the average with the old level. Stage order is fixed (no alternation).
PopulationState step_maccormack(const PopulationState& u, const ModelParams& p, const GridSpec& g,
                                const KernelTable& k, int threads) {
  const double nu = p.gamma * g.dt / g.dx;
  const SourceField src = compute_sources(u, k, p, threads);
  const PopulationState star = upwind_stage(u, &src, nu, g.dt);
  const SourceField src_star = compute_sources(star, k, p, threads);

  const Ring ring{u.size()};
  PopulationState out;
  out.u_plus.resize(ring.n);
  out.u_minus.resize(ring.n);
  for (std::size_t i = 0; i < ring.n; ++i) {
    const std::size_t im = ring.prev(i);
    const std::size_t ip = ring.next(i);
    const double up2 = star.u_plus[i] - nu * (star.u_plus[ip] - star.u_plus[i]) + g.dt * src_star.s_plus[i];
    const double um2 = star.u_minus[i] + nu * (star.u_minus[i] - star.u_minus[im]) + g.dt * src_star.s_minus[i];
    out.u_plus[i] = 0.5 * (u.u_plus[i] + up2);
    out.u_minus[i] = 0.5 * (u.u_minus[i] + um2);
  }
  return out;
}

// Transport (upwind), then explicit midpoint for the turning ODE.
PopulationState step_fsm(const PopulationState& u, const ModelParams& p, const GridSpec& g,
                         const KernelTable& k, int threads) {
  const PopulationState star = upwind_stage(u, nullptr, p.gamma * g.dt / g.dx, g.dt);
  const SourceField src_star = compute_sources(star, k, p, threads);

  const std::size_t n = u.size();
  PopulationState mid;
  mid.u_plus.resize(n);
  mid.u_minus.resize(n);
  const double half = 0.5 * g.dt;
  for (std::size_t i = 0; i < n; ++i) {
    mid.u_plus[i] = star.u_plus[i] + half * src_star.s_plus[i];
    mid.u_minus[i] = star.u_minus[i] + half * src_star.s_minus[i];
  }
  const SourceField src_mid = compute_sources(mid, k, p, threads);

  PopulationState out;
  out.u_plus.resize(n);
  out.u_minus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.u_plus[i] = star.u_plus[i] + g.dt * src_mid.s_plus[i];
    out.u_minus[i] = star.u_minus[i] + g.dt * src_mid.s_minus[i];
  }
  return out;
}

// Wave-propagation update with the quasi-steady split. The flux difference of
// the modified states, nu * ((u[i] - delta[i]) - (u[i-1] + delta[i-1])),
// reduces exactly to the upwind difference minus (dt/2)(s[i] + s[i-1]) since
// nu * delta = dt * s / 2; it is evaluated in that reduced form.
PopulationState step_qsa(SchemeId scheme, const PopulationState& u, const ModelParams& p,
                         const GridSpec& g, const KernelTable& k, int threads) {
  const double nu = p.gamma * g.dt / g.dx;
  const SourceField src = compute_sources(u, k, p, threads);
  const QsaSplit split = qsa_split(src, g, p);
  const SlopeField slopes = compute_slopes(scheme, u, split, g);

  const double correction = 0.5 * nu * (g.dx - p.gamma * g.dt);
  const double half = 0.5 * g.dt;
  const Ring ring{u.size()};
  PopulationState out;
  out.u_plus.resize(ring.n);
  out.u_minus.resize(ring.n);
  for (std::size_t i = 0; i < ring.n; ++i) {
    const std::size_t im = ring.prev(i);
    const std::size_t ip = ring.next(i);
    out.u_plus[i] = u.u_plus[i] - nu * (u.u_plus[i] - u.u_plus[im]) +
                    half * (src.s_plus[i] + src.s_plus[im]) -
                    correction * (slopes.sigma_plus[i] - slopes.sigma_plus[im]);
    out.u_minus[i] = u.u_minus[i] + nu * (u.u_minus[ip] - u.u_minus[i]) +
                     half * (src.s_minus[ip] + src.s_minus[i]) -
                     correction * (slopes.sigma_minus[ip] - slopes.sigma_minus[i]);
  }
  return out;
}

enum class SlopeRule { Zero, Centered, Upwind, Downwind, Minmod, Superbee, MC };

struct SlopeWiring {
  SlopeRule plus;
  SlopeRule minus;
};

SlopeWiring wiring_for(SchemeId scheme) {
  switch (scheme) {
    case SchemeId::QSA_Center: return {SlopeRule::Centered, SlopeRule::Centered};
    case SchemeId::QSA_BW: return {SlopeRule::Upwind, SlopeRule::Downwind};
    case SchemeId::QSA_LW: return {SlopeRule::Downwind, SlopeRule::Upwind};
    case SchemeId::QSA_Minmod: return {SlopeRule::Minmod, SlopeRule::Minmod};
    case SchemeId::QSA_Superbee: return {SlopeRule::Superbee, SlopeRule::Superbee};
    case SchemeId::QSA_MC: return {SlopeRule::MC, SlopeRule::MC};
    default: return {SlopeRule::Zero, SlopeRule::Zero};
  }
}

Field slopes_for(SlopeRule rule, const Field& u, const Field& delta, double dx) {
  const Ring ring{u.size()};
  Field sigma(ring.n, 0.0);
  if (rule == SlopeRule::Zero) return sigma;

  // jump[i] = J(i+1/2)
  Field jump(ring.n);
  for (std::size_t i = 0; i < ring.n; ++i) {
    const std::size_t ip = ring.next(i);
    jump[i] = (u[ip] - u[i]) - (delta[ip] + delta[i]);
  }
  for (std::size_t i = 0; i < ring.n; ++i) {
    const double upwind = jump[ring.prev(i)] / dx;
    const double downwind = jump[i] / dx;
    const double centered = (jump[ring.prev(i)] + jump[i]) / (2.0 * dx);
    switch (rule) {
      case SlopeRule::Zero: break;
      case SlopeRule::Centered: sigma[i] = centered; break;
      case SlopeRule::Upwind: sigma[i] = upwind; break;
      case SlopeRule::Downwind: sigma[i] = downwind; break;
      case SlopeRule::Minmod: sigma[i] = minmod(upwind, downwind); break;
      case SlopeRule::Superbee:
        sigma[i] = maxmod(minmod(upwind, 2.0 * downwind), minmod(2.0 * upwind, downwind));
        break;
      case SlopeRule::MC: sigma[i] = mc_limit(centered, 2.0 * upwind, 2.0 * downwind); break;
    }
  }
  return sigma;
}

void check_finite(const PopulationState& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s.u_plus[i]) || !std::isfinite(s.u_minus[i]))
      throw NonFiniteError(s.time_index, i);
  }
}

}  // namespace

std::string_view scheme_name(SchemeId id) {
  for (const auto& e : kNames)
    if (e.id == id) return e.name;
  return "unknown";
}

std::optional<SchemeId> parse_scheme(std::string_view name) {
  for (const auto& e : kNames)
    if (e.name == name) return e.id;
  return std::nullopt;
}

std::string scheme_name_list() {
  std::string out;
  for (const auto& e : kNames) {
    if (!out.empty()) out += ", ";
    out += e.name;
  }
  return out;
}

bool is_qsa_family(SchemeId id) {
  return id != SchemeId::Upwind && id != SchemeId::MacCormack && id != SchemeId::FSM;
}

double minmod(double a, double b) {
  if (!same_sign(a, b)) return 0.0;
  return std::abs(a) <= std::abs(b) ? a : b;
}

double maxmod(double a, double b) {
  if (!same_sign(a, b)) return 0.0;
  return std::abs(a) >= std::abs(b) ? a : b;
}

double mc_limit(double centered, double twice_upwind, double twice_downwind) {
  if (!same_sign(centered, twice_upwind) || !same_sign(centered, twice_downwind)) return 0.0;
  double best = centered;
  if (std::abs(twice_upwind) < std::abs(best)) best = twice_upwind;
  if (std::abs(twice_downwind) < std::abs(best)) best = twice_downwind;
  return best;
}

QsaSplit qsa_split(const SourceField& sources, const GridSpec& grid, const ModelParams& params) {
  const std::size_t n = sources.s_plus.size();
  const double denom = 2.0 * params.gamma;
  QsaSplit split;
  split.delta_plus.resize(n);
  split.delta_minus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    split.delta_plus[i] = grid.dx * sources.s_plus[i] / denom;
    split.delta_minus[i] = -(grid.dx * sources.s_minus[i]) / denom;
  }
  return split;
}

SlopeField compute_slopes(SchemeId scheme, const PopulationState& state, const QsaSplit& split,
                          const GridSpec& grid) {
  const SlopeWiring wiring = wiring_for(scheme);
  return SlopeField{slopes_for(wiring.plus, state.u_plus, split.delta_plus, grid.dx),
                    slopes_for(wiring.minus, state.u_minus, split.delta_minus, grid.dx)};
}

NonFiniteError::NonFiniteError(std::int64_t step, std::size_t cell)
    : std::runtime_error(fmt::format("non-finite density at step {} cell {}", step, cell)),
      step_(step),
      cell_(cell) {}

PopulationState step(SchemeId scheme, const PopulationState& state, const ModelParams& params,
                     const GridSpec& grid, const KernelTable& kernels, int threads) {
  PopulationState next;
  switch (scheme) {
    case SchemeId::Upwind: next = step_upwind(state, params, grid, kernels, threads); break;
    case SchemeId::MacCormack: next = step_maccormack(state, params, grid, kernels, threads); break;
    case SchemeId::FSM: next = step_fsm(state, params, grid, kernels, threads); break;
    default: next = step_qsa(scheme, state, params, grid, kernels, threads); break;
  }
  next.time_index = state.time_index + 1;
  check_finite(next);
  return next;
}

}  // namespace nlh
