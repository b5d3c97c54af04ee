#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecgli/dataset/forward_model.hpp"
#include "ecgli/inverse/inverse.hpp"
#include "ecgli/surrogate/train.hpp"

namespace ecgli::cli {

struct SurrogateConfig {
  int n_s = 8;
  std::vector<int> dyn_hidden{16, 16};
  std::vector<int> rec_hidden{24, 24};
  double dt = 0.0;  // 0: 1 / (n_t - 1)
  std::uint64_t seed = 1;

  bool operator==(const SurrogateConfig&) const = default;
};

/// Every knob of the pipeline. Grammar of the file form:
///
///   # comment
///   [section]
///   key = value          arrays comma-separated
///
/// Unknown sections or keys are rejected; omitted keys keep their defaults.
struct RunConfig {
  dataset::HfConfig hf;
  dataset::SplitSizes sizes;
  std::uint64_t dataset_seed = 1;
  SurrogateConfig surrogate;
  surrogate::TrainSchedule schedule{{{200, 1e-2}, {200, 1e-3}}, 200, 0.0, 0.0};
  inverse::BatchOptions inverse;
  /// Radial subdivision counts for the 3D multi-start sweep (empty: off).
  std::vector<int> radial_sweep;
  /// Angular subdivision counts (per axis, theta = phi) for the sweep.
  std::vector<int> angular_sweep;

  /// Cross-field checks; throws ConfigError naming the key.
  void validate() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);
/// Canonical text form: every key, 17 significant digits.
std::string serialize_config(const RunConfig& cfg);
/// FNV-1a of the canonical text, 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// One line per key: section.key, type, default value.
std::string describe_schema();

/// Default subdivisions for a case: 8x4 (2D), 4x1x4 (3D), 8x4x2 (radius).
std::vector<int> default_subdivisions(dataset::CaseKind kind);

bool configs_equal(const RunConfig& a, const RunConfig& b);

}  // namespace ecgli::cli
