#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlh/diagnostics.hpp"
#include "nlh/model.hpp"
#include "nlh/runner.hpp"

namespace nlh {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to continue a run bit-identically. Layout on disk is
/// documented in docs/checkpoint_format.md.
struct Checkpoint {
  std::string config_hash;
  PopulationState state;
  ErrorSeries series;
  std::vector<Snapshot> snapshots;
  HealthFlags health;
  double initial_mass = 0.0;
  std::string rng_state;

  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// `<dir>/ckpt-<step>`.
std::string checkpoint_path(const std::string& dir, std::int64_t step);

/// Writes atomically (temporary file + rename) so an I/O failure never
/// damages an existing checkpoint. Returns the final path.
std::string write_checkpoint(const std::string& dir, const Checkpoint& ckpt);

Checkpoint read_checkpoint(const std::string& path);

}  // namespace nlh
