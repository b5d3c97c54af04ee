#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgli/dataset/dataset.hpp"
#include "ecgli/fem/grid.hpp"
#include "ecgli/surrogate/ldnet.hpp"
#include "ecgli/surrogate/train.hpp"

namespace ecgli::inverse {

/// J(p) with its gradient written into grad (same length as p).
using Misfit = std::function<double(std::span<const double> p, std::span<double> grad)>;

/// Centers of a uniform subdivision of a parameter box.
struct CandidateGrid {
  std::vector<int> subdivisions;
  std::vector<Vec> points;  // first axis varies slowest

  std::size_t size() const { return points.size(); }
};

CandidateGrid partition_candidates(const dataset::ParamBox& box, const std::vector<int>& subdivisions);

/// Coordinate-wise clamp onto the box.
Vec project(std::span<const double> p, const dataset::ParamBox& box);

struct ScreenResult {
  std::size_t index = 0;
  Vec p;
  double misfit = 0.0;
};

/// Misfit at every candidate; the smallest wins, ties to the lowest index.
ScreenResult screen(const Misfit& j, const CandidateGrid& candidates);

/// n_adam projected Adam iterations from every candidate (fresh moments),
/// then the refined point with the smallest misfit.
ScreenResult screen_with_warmup(const Misfit& j, const CandidateGrid& candidates, const dataset::ParamBox& box,
                                int n_adam, double lr);

struct InverseOptions {
  std::vector<surrogate::AdamStage> adam{{20, 1e-2}, {20, 1e-3}};
  int lbfgs_epochs = 20;
};

struct TraceRow {
  int iteration = 0;
  std::string stage;
  Vec p;
  double misfit = 0.0;
};

struct InverseResult {
  Vec p_hat;
  double misfit = 0.0;
  ScreenResult screening;
  std::vector<TraceRow> trace;
  double wall_seconds = 0.0;
};

/// Adam stages then L-BFGS on J, projecting after every update. The result
/// is the best iterate of the trace. Throws NumericFailure when J is not
/// finite at an accepted iterate (the message lists the trace length).
InverseResult invert(const Misfit& j, const dataset::ParamBox& box, std::span<const double> p0,
                     const InverseOptions& opts);

/// Surrogate MSE against a normalized observation, as a function of the
/// normalized parameters.
Misfit surrogate_misfit(const surrogate::SurrogateModel& model, Vec observed_norm);

enum class Strategy { Screen, Warmup };
Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

struct BatchOptions {
  std::vector<int> subdivisions{8, 4};
  Strategy strategy = Strategy::Screen;
  int warmup_iterations = 30;
  double warmup_lr = 1e-2;
  InverseOptions inverse;
  int jobs = 1;
};

struct SampleOutcome {
  std::size_t index = 0;
  Vec p_true;
  Vec p_hat;
  double misfit = 0.0;
  double screening_misfit = 0.0;
  double localization_error = 0.0;  // cm
  std::optional<double> radius_relative_error;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;
  std::vector<TraceRow> trace;
};

struct InverseBatchStats {
  std::vector<SampleOutcome> samples;
  double min_misfit = 0.0;
  double mean_misfit = 0.0;
  double std_misfit = 0.0;
  double mean_seconds = 0.0;
  double median_localization_error = 0.0;
  double mean_localization_error = 0.0;
  double localization_mse = 0.0;
  std::optional<double> median_radius_relative_error;
  std::size_t failures = 0;
};

/// Maps parameters to the cartesian position of the center (cm); for 3D the
/// shell map is applied to (theta, r, phi).
std::function<Point3(std::span<const double>)> center_map(dataset::CaseKind kind,
                                                          const fem::EllipsoidBounds& bounds = {});

/// partition -> screen (or warm-up) -> invert for every sample of the
/// split, searching in normalized coordinates over the dataset's domain.
/// Per-sample failures are recorded and the batch continues.
InverseBatchStats invert_batch(const surrogate::SurrogateModel& model, const dataset::DatasetView& split,
                               const BatchOptions& opts, const fem::EllipsoidBounds& bounds = {});

/// Aggregates outcomes (used by invert_batch; exposed for testing).
InverseBatchStats summarize(std::vector<SampleOutcome> samples);

double median(std::vector<double> v);

}  // namespace ecgli::inverse
