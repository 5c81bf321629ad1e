#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nlh/model.hpp"

namespace nlh {

enum class SchemeId {
  Upwind,
  MacCormack,
  FSM,
  QSA,
  QSA_Center,
  QSA_BW,
  QSA_LW,
  QSA_Minmod,
  QSA_Superbee,
  QSA_MC,
};

inline constexpr std::array<SchemeId, 10> kAllSchemes = {
    SchemeId::Upwind,     SchemeId::MacCormack, SchemeId::FSM,        SchemeId::QSA,
    SchemeId::QSA_Center, SchemeId::QSA_BW,     SchemeId::QSA_LW,     SchemeId::QSA_Minmod,
    SchemeId::QSA_Superbee, SchemeId::QSA_MC,
};

/// Lower-case CLI name, e.g. "qsa_mc".
std::string_view scheme_name(SchemeId id);
std::optional<SchemeId> parse_scheme(std::string_view name);
/// Comma-separated list of all valid names, for error messages.
std::string scheme_name_list();

bool is_qsa_family(SchemeId id);

/// Half-cell jumps of the quasi-steady split: U^L = U - delta, U^R = U + delta.
struct QsaSplit {
  Field delta_plus;
  Field delta_minus;
};

struct SlopeField {
  Field sigma_plus;
  Field sigma_minus;
};

/// delta+ = dx s+ / (2 gamma), delta- = -dx s- / (2 gamma).
QsaSplit qsa_split(const SourceField& sources, const GridSpec& grid, const ModelParams& params);

/// Reconstruction slopes for a QSA-family scheme; zero for plain QSA and for
/// the non-QSA schemes.
///
/// The one-sided slopes are the jumps between the right state of one cell and
/// the left state of its neighbour,
///   J(i+1/2) = (u[i+1] - u[i]) - (delta[i+1] + delta[i]),
/// divided by dx; the centred slope is (J(i-1/2) + J(i+1/2)) / (2 dx).
SlopeField compute_slopes(SchemeId scheme, const PopulationState& state, const QsaSplit& split,
                          const GridSpec& grid);

/// Smaller-magnitude argument when both share a sign, else 0.
double minmod(double a, double b);
/// Larger-magnitude argument when both share a sign, else 0.
double maxmod(double a, double b);
/// Three-argument minmod used by the monotonized-central limiter.
double mc_limit(double centered, double twice_upwind, double twice_downwind);

/// A step produced NaN or Inf.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::int64_t step, std::size_t cell);
  std::int64_t step() const { return step_; }
  std::size_t cell() const { return cell_; }

 private:
  std::int64_t step_;
  std::size_t cell_;
};

/// Advances `state` by one time step with the selected scheme.
/// Throws NonFiniteError if any output value is not finite.
PopulationState step(SchemeId scheme, const PopulationState& state, const ModelParams& params,
                     const GridSpec& grid, const KernelTable& kernels, int threads = 1);

}  // namespace nlh
