#pragma once

#include <filesystem>
#include <span>

#include "ecgli/dataset/dataset.hpp"
#include "ecgli/surrogate/ldnet.hpp"

namespace ecgli::surrogate {

struct Metrics {
  double mse = 0.0;  // on normalized signals
  double normalized_rmse = 0.0;
  double pearson_dissimilarity = 0.0;
};

/// Pearson correlation; for constant traces returns 1 when both are
/// constant and 0 otherwise (dissimilarity 0 or 1).
double pearson(std::span<const double> a, std::span<const double> b);

/// Metrics of normalized predictions against normalized targets, each
/// lead-major n_leads x n_t. `range` is the normalized training-signal range.
Metrics compute_metrics(const std::vector<Vec>& pred, const std::vector<Vec>& target, std::size_t n_leads,
                        std::size_t n_t, double range);

Metrics evaluate(const SurrogateModel& model, const dataset::DatasetView& split, int jobs = 1);

/// Binary file "ECGLMODL": version, dims, dt, signal axis, normalization,
/// widths, theta, FNV-1a checksum.
void save_model(const std::filesystem::path& path, const SurrogateModel& model);
SurrogateModel load_model(const std::filesystem::path& path);

}  // namespace ecgli::surrogate
