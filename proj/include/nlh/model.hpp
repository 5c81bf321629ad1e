#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlh {

using Field = std::vector<double>;

/// Raised for any invalid model/grid/run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physical constants of the two-population turning model.
/// Defaults are the reference parameter set (q_al = 0, L = 10, A = 2).
struct ModelParams {
  double gamma = 0.1;
  double lambda1 = 0.2;
  double lambda2 = 0.9;
  double y0 = 2.0;
  double q_a = 1.1;
  double q_r = 2.2;
  double q_al = 0.0;
  double s_a = 1.0;
  double s_r = 0.25;
  double s_al = 0.5;
  double m_a = 1.0 / 8.0;
  double m_r = 0.25 / 8.0;
  double m_al = 0.5 / 8.0;
  double A = 2.0;
  double L = 10.0;

  /// Sets every kernel width to range/8.
  void set_widths_from_ranges();
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

/// Uniform periodic grid on [0, L) plus a fixed time step.
struct GridSpec {
  double dx = 0.0;
  double dt = 0.0;
  double T = 0.0;
  double length = 0.0;
  std::size_t nx = 0;
  std::int64_t nt = 0;

  /// Builds and validates a grid: nx = floor(L/dx), nt = floor(T/dt),
  /// both tolerant to representation error in the quotient.
  static GridSpec make(const ModelParams& params, double dx, double dt, double T);

  double courant(double gamma) const { return gamma * dt / dx; }
  double cell_center(std::size_t i) const { return static_cast<double>(i) * dx; }
};

/// floor(a/b) that snaps quotients within 1e-9 of an integer onto it.
std::int64_t snapped_floor_div(double a, double b);

/// Cell averages of right- and left-moving densities at step time_index.
struct PopulationState {
  Field u_plus;
  Field u_minus;
  std::int64_t time_index = 0;

  std::size_t size() const { return u_plus.size(); }
  Field total_density() const;

  bool operator==(const PopulationState&) const = default;
};

/// Compensated sum of (u+ + u-) * dx.
double total_mass(const PopulationState& state, double dx);

enum class KernelKind { Repulsion, Attraction, Alignment };

/// Simpson-weighted kernel samples on offsets k*dx, k = 0..samples.
struct KernelWeights {
  std::vector<double> w;
  int samples = 0;
  /// 1 - sum(w): the kernel mass not captured by the truncated quadrature.
  double mass_defect = 0.0;
};

struct KernelTable {
  KernelWeights repulsion;
  KernelWeights attraction;
  KernelWeights alignment;
  double dx = 0.0;
  std::size_t nx = 0;

  const KernelWeights& operator[](KernelKind kind) const;
  int max_samples() const;
};

struct SignalField {
  Field y_plus;
  Field y_minus;
};

struct TurningRates {
  Field lambda_plus;
  Field lambda_minus;
};

struct SourceField {
  Field s_plus;
  Field s_minus;
};

/// Gaussian interaction kernel centred at `range` with standard deviation `width`.
double gaussian_kernel(double s, double range, double width);

/// Number of quadrature intervals covering [0, 2*range]: the nearest even
/// integer to 2*range/dx. Throws ConfigError when that is zero.
int kernel_sample_count(double range, double dx, const char* name);

KernelTable build_kernel_table(const ModelParams& params, const GridSpec& grid);

/// Nonlocal signals y+/y- on the periodic grid.
///
/// Each cell accumulates its quadrature in ascending offset order, serially,
/// so results are bitwise independent of `threads`. The left-moving signal is
/// the exact negation of the right-moving one for this kernel family.
SignalField compute_signals(const PopulationState& state, const KernelTable& kernels,
                            const ModelParams& params, int threads = 1);

/// h(y) = 0.5 + 0.5 tanh(y - y0).
inline double turning_function(double y, double y0) {
  return 0.5 + 0.5 * std::tanh(y - y0);
}

TurningRates turning_rates(const SignalField& signals, const ModelParams& params);

/// s+ = -lambda+ u+ + lambda- u-, s- = -s+.
SourceField source_terms(const PopulationState& state, const TurningRates& rates);

/// Signals -> rates -> sources in one call.
SourceField compute_sources(const PopulationState& state, const KernelTable& kernels,
                            const ModelParams& params, int threads = 1);

/// Right-hand side of the homogeneous steady-state equation at (u*, A - u*).
double homogeneous_steady_state_residual(double u_star, const ModelParams& params);

}  // namespace nlh
