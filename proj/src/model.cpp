#include "nlh/model.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nlh {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool finite_all(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// Fills ext[pad + i] = u[i mod n] for i in [-pad, n + pad).
void periodic_extend(std::span<const double> u, std::size_t pad, std::vector<double>& ext) {
  const std::size_t n = u.size();
  ext.resize(n + 2 * pad);
  for (std::size_t j = 0; j < ext.size(); ++j) {
    // j - pad shifted into [0, n) without signed arithmetic
    const std::size_t src = (j + n * (pad / n + 1) - pad) % n;
    ext[j] = u[src];
  }
}

// acc[i] = sum_k w[k] * (fwd[i + k] - bwd[i - k]) for i in [begin, end).
// k-outer / i-inner keeps the per-cell accumulation order fixed while letting
// the compiler vectorise across cells.
void accumulate_differences(const KernelWeights& kernel, const double* fwd, const double* bwd,
                            std::size_t begin, std::size_t end, double* acc) {
  std::fill(acc + begin, acc + end, 0.0);
  for (int k = 0; k <= kernel.samples; ++k) {
    const double wk = kernel.w[static_cast<std::size_t>(k)];
    const double* f = fwd + k;
    const double* b = bwd - k;
    for (std::size_t i = begin; i < end; ++i) acc[i] += wk * (f[i] - b[i]);
  }
}

}  // namespace

void ModelParams::set_widths_from_ranges() {
  m_a = s_a / 8.0;
  m_r = s_r / 8.0;
  m_al = s_al / 8.0;
}

void ModelParams::validate() const {
  require(finite_all({gamma, lambda1, lambda2, y0, q_a, q_r, q_al, s_a, s_r, s_al, m_a, m_r,
                      m_al, A, L}),
          "model parameters must be finite");
  require(gamma > 0.0, "gamma must be positive");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "turning rates lambda1, lambda2 must be >= 0");
  require(q_a >= 0.0 && q_r >= 0.0 && q_al >= 0.0, "interaction magnitudes must be >= 0");
  require(s_a > 0.0 && s_r > 0.0 && s_al > 0.0, "interaction ranges must be positive");
  require(m_a > 0.0 && m_r > 0.0 && m_al > 0.0, "kernel widths must be positive");
  require(A > 0.0, "total population density A must be positive");
  require(L > 0.0, "domain length L must be positive");
}

std::int64_t snapped_floor_div(double a, double b) {
  const double q = a / b;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(q));
}

GridSpec GridSpec::make(const ModelParams& params, double dx, double dt, double T) {
  params.validate();
  require(std::isfinite(dx) && dx > 0.0, "dx must be positive");
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(std::isfinite(T) && T > 0.0, "final time T must be positive");

  GridSpec g;
  g.dx = dx;
  g.dt = dt;
  g.T = T;
  g.length = params.L;
  const std::int64_t nx = snapped_floor_div(params.L, dx);
  require(nx >= 1, "dx exceeds the domain length");
  g.nx = static_cast<std::size_t>(nx);
  g.nt = snapped_floor_div(T, dt);

  const double courant = g.courant(params.gamma);
  require(courant <= 1.0 + 1e-12,
          fmt::format("CFL violated: Courant number gamma*dt/dx = {:.17g} exceeds 1", courant));

  const int widest = std::max({kernel_sample_count(params.s_r, dx, "repulsion"),
                               kernel_sample_count(params.s_a, dx, "attraction"),
                               kernel_sample_count(params.s_al, dx, "alignment")});
  require(g.nx >= 2 * static_cast<std::size_t>(widest),
          fmt::format("grid too small: nx = {} but the widest kernel needs 2*{} cells", g.nx,
                      widest));
  return g;
}

Field PopulationState::total_density() const {
  Field u(size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = u_plus[i] + u_minus[i];
  return u;
}

double total_mass(const PopulationState& state, double dx) {
  // Neumaier summation
  double sum = 0.0;
  double c = 0.0;
  auto add = [&](double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      c += (sum - t) + v;
    else
      c += (v - t) + sum;
    sum = t;
  };
  for (double v : state.u_plus) add(v);
  for (double v : state.u_minus) add(v);
  return (sum + c) * dx;
}

const KernelWeights& KernelTable::operator[](KernelKind kind) const {
  switch (kind) {
    case KernelKind::Repulsion: return repulsion;
    case KernelKind::Attraction: return attraction;
    case KernelKind::Alignment: return alignment;
  }
  return repulsion;
}

int KernelTable::max_samples() const {
  return std::max({repulsion.samples, attraction.samples, alignment.samples});
}

double gaussian_kernel(double s, double range, double width) {
  const double z = (s - range) / width;
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi * width * width);
}

int kernel_sample_count(double range, double dx, const char* name) {
  const double exact = 2.0 * range / dx;
  const auto n = static_cast<long long>(2.0 * std::round(range / dx));
  if (n <= 0) {
    throw ConfigError(fmt::format(
        "{} kernel: 2*s/dx = {:.17g} rounds to zero quadrature intervals", name, exact));
  }
  if (n > 1'000'000'000LL) throw ConfigError(fmt::format("{} kernel: too many samples", name));
  return static_cast<int>(n);
}

namespace {

KernelWeights simpson_weights(double range, double width, double dx, const char* name) {
  KernelWeights out;
  out.samples = kernel_sample_count(range, dx, name);
  out.w.resize(static_cast<std::size_t>(out.samples) + 1);
  const double h3 = dx / 3.0;
  double mass = 0.0;
  for (int k = 0; k <= out.samples; ++k) {
    const double coef = (k == 0 || k == out.samples) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    const double wk = coef * h3 * gaussian_kernel(k * dx, range, width);
    out.w[static_cast<std::size_t>(k)] = wk;
    mass += wk;
  }
  out.mass_defect = 1.0 - mass;
  return out;
}

}  // namespace

KernelTable build_kernel_table(const ModelParams& params, const GridSpec& grid) {
  KernelTable t;
  t.dx = grid.dx;
  t.nx = grid.nx;
  t.repulsion = simpson_weights(params.s_r, params.m_r, grid.dx, "repulsion");
  t.attraction = simpson_weights(params.s_a, params.m_a, grid.dx, "attraction");
  t.alignment = simpson_weights(params.s_al, params.m_al, grid.dx, "alignment");
  return t;
}

SignalField compute_signals(const PopulationState& state, const KernelTable& kernels,
                            const ModelParams& params, int threads) {
  const std::size_t n = state.size();
  if (state.u_minus.size() != n || n != kernels.nx)
    throw std::invalid_argument("compute_signals: state size does not match kernel grid");

  const bool with_alignment = params.q_al != 0.0;
  const auto pad = static_cast<std::size_t>(kernels.max_samples());

  std::vector<double> total_ext;
  periodic_extend(state.total_density(), pad, total_ext);
  std::vector<double> plus_ext;
  std::vector<double> minus_ext;
  if (with_alignment) {
    periodic_extend(state.u_plus, pad, plus_ext);
    periodic_extend(state.u_minus, pad, minus_ext);
  }

  Field q_rep(n), q_att(n), q_ali(with_alignment ? n : 0);
  const double* u_mid = total_ext.data() + pad;

  constexpr std::size_t kBlock = 256;
  const auto blocks = static_cast<std::int64_t>((n + kBlock - 1) / kBlock);
  (void)threads;
#ifdef _OPENMP
#pragma omp parallel for num_threads(std::max(1, threads)) schedule(static)
#endif
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
    const std::size_t end = std::min(n, begin + kBlock);
    accumulate_differences(kernels.repulsion, u_mid, u_mid, begin, end, q_rep.data());
    accumulate_differences(kernels.attraction, u_mid, u_mid, begin, end, q_att.data());
    if (with_alignment) {
      // u-(x + s) - u+(x - s)
      accumulate_differences(kernels.alignment, minus_ext.data() + pad, plus_ext.data() + pad,
                             begin, end, q_ali.data());
    }
  }

  SignalField out;
  out.y_plus.resize(n);
  out.y_minus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = params.q_r * q_rep[i] - params.q_a * q_att[i];
    if (with_alignment) y += params.q_al * q_ali[i];
    out.y_plus[i] = y;
    out.y_minus[i] = -y;
  }
  return out;
}

TurningRates turning_rates(const SignalField& signals, const ModelParams& params) {
  const std::size_t n = signals.y_plus.size();
  TurningRates r;
  r.lambda_plus.resize(n);
  r.lambda_minus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.lambda_plus[i] = params.lambda1 + params.lambda2 * turning_function(signals.y_plus[i], params.y0);
    r.lambda_minus[i] =
        params.lambda1 + params.lambda2 * turning_function(signals.y_minus[i], params.y0);
  }
  return r;
}

SourceField source_terms(const PopulationState& state, const TurningRates& rates) {
  const std::size_t n = state.size();
  SourceField s;
  s.s_plus.resize(n);
  s.s_minus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = -rates.lambda_plus[i] * state.u_plus[i] + rates.lambda_minus[i] * state.u_minus[i];
    s.s_plus[i] = v;
    s.s_minus[i] = -v;
  }
  return s;
}

SourceField compute_sources(const PopulationState& state, const KernelTable& kernels,
                            const ModelParams& params, int threads) {
  return source_terms(state, turning_rates(compute_signals(state, kernels, params, threads), params));
}

double homogeneous_steady_state_residual(double u_star, const ModelParams& p) {
  const double base = p.lambda1 + 0.5 * p.lambda2;
  const double right_turn = base + 0.5 * p.lambda2 * std::tanh(p.A * p.q_al - 2.0 * p.q_al * u_star - p.y0);
  const double left_turn = base + 0.5 * p.lambda2 * std::tanh(-p.A * p.q_al + 2.0 * p.q_al * u_star - p.y0);
  return -u_star * right_turn + (p.A - u_star) * left_turn;
}

}  // namespace nlh
