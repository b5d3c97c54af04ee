#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "ecgli/cli/config.hpp"
#include "ecgli/cli/manifest.hpp"
#include "ecgli/inverse/inverse.hpp"
#include "ecgli/surrogate/metrics.hpp"

namespace ecgli::cli {

using Logger = std::function<void(const std::string&)>;

/// Dataset generation with this config; saved under `dir`.
dataset::Dataset stage_gen_dataset(const RunConfig& cfg, const std::filesystem::path& dir, int jobs,
                                   const Logger& log = {});

/// Builds the surrogate described by cfg for the dataset and trains it.
surrogate::TrainResult stage_train(const RunConfig& cfg, const dataset::Dataset& ds, int jobs,
                                   const Logger& log = {});

/// Per-sample results as CSV: index, true and estimated parameters, misfits,
/// localization error, radius error, seconds, status.
void write_inverse_csv(const std::filesystem::path& path, const inverse::InverseBatchStats& stats);
void write_trace_csv(const std::filesystem::path& path, const std::vector<inverse::TraceRow>& trace);

/// Adds the batch statistics to a manifest under `prefix`.
void record_stats(RunManifest& m, const std::string& prefix, const inverse::InverseBatchStats& st);
void record_metrics(RunManifest& m, const std::string& prefix, const surrogate::Metrics& mt);

struct PipelineOptions {
  bool force = false;
  int jobs = 1;
  Logger log;
};

/// gen-dataset -> train -> invert_batch (test split) -> eval, all artifacts
/// under `out`. If out/manifest.txt records a completed run with the same
/// config hash and `force` is false, returns it without recomputing. A failing
/// stage leaves a manifest with status = failed and failed_stage = <name>,
/// then rethrows.
RunManifest run_pipeline(const RunConfig& cfg, const std::filesystem::path& out, const PipelineOptions& opts);

}  // namespace ecgli::cli
