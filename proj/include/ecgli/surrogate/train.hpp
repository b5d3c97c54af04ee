#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ecgli/dataset/dataset.hpp"
#include "ecgli/surrogate/ldnet.hpp"
#include "ecgli/surrogate/optim.hpp"

namespace ecgli::surrogate {

/// Normalized inputs and targets of a set of samples.
struct TrainingBatch {
  std::vector<Vec> p_norm;
  std::vector<Vec> target;  // lead-major, normalized

  std::size_t size() const { return p_norm.size(); }
};

TrainingBatch make_batch(const dataset::DatasetView& view, const dataset::Normalization& norm);

/// mean over samples of signal_loss(., ., omega) + alpha |theta|^2. When
/// grad is non-empty it receives the full gradient. Samples run on `jobs`
/// workers; per-sample gradients are summed in sample order.
double training_loss(const SurrogateModel& model, std::span<const double> theta, const TrainingBatch& batch,
                     double alpha, double omega, std::span<double> grad, int jobs = 1);

struct AdamStage {
  int epochs = 0;
  double lr = 1e-3;
};

struct TrainSchedule {
  std::vector<AdamStage> adam;
  int lbfgs_epochs = 0;
  double alpha = 0.0;
  double omega = 0.0;

  void validate() const;
};

struct HistoryRow {
  int epoch = 0;
  std::string stage;
  double train_loss = 0.0;  // objective incl. regularization
  double val_mse = 0.0;

  bool operator==(const HistoryRow&) const = default;
};

struct TrainResult {
  SurrogateModel model;  // validation-best parameters
  std::vector<HistoryRow> history;
  int best_epoch = 0;
  double best_val_mse = 0.0;
  bool lbfgs_line_search_failed = false;
};

using EpochLog = std::function<void(const HistoryRow&)>;

/// Adam stages, then L-BFGS, all full batch. Validation MSE is recorded per
/// epoch and the best parameters (including the initial ones) are returned.
/// A non-finite loss throws NumericFailure; `history_out`, when given, holds
/// the rows recorded up to that point.
TrainResult train(const SurrogateModel& initial, const TrainingBatch& train_batch, const TrainingBatch& val_batch,
                  const TrainSchedule& schedule, int jobs = 1, const EpochLog& log = {},
                  std::vector<HistoryRow>* history_out = nullptr);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history);

}  // namespace ecgli::surrogate
