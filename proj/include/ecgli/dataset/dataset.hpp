#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecgli/dataset/case_params.hpp"
#include "ecgli/dataset/normalization.hpp"
#include "ecgli/pecg/pecg.hpp"

namespace ecgli::dataset {

struct Sample {
  Vec p;
  pecg::PecgSignal signal;  // physical units

  bool operator==(const Sample&) const = default;
};

class DatasetView;

/// Samples are ordered train, then validation, then test.
struct Dataset {
  CaseKind kind = CaseKind::Stimulus2d;
  ParamBox domain;
  std::vector<Sample> samples;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  Normalization norm;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::size_t n_leads() const { return samples.empty() ? 0 : samples.front().signal.n_leads; }
  std::size_t n_t() const { return samples.empty() ? 0 : samples.front().signal.n_t; }

  /// "train", "val", "test" or "all"; anything else throws InvalidArgument.
  DatasetView split(const std::string& name) const;

  /// Split sizes sum to the sample count, identical signal shapes, every p in
  /// the domain, normalization dimension matches.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// Contiguous read-only slice of a dataset sharing its normalization.
class DatasetView {
 public:
  DatasetView(const Dataset& ds, std::size_t begin, std::size_t count, std::string name)
      : ds_(&ds), begin_(begin), count_(count), name_(std::move(name)) {}

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  const Sample& operator[](std::size_t i) const { return ds_->samples[begin_ + i]; }
  const Normalization& normalization() const { return ds_->norm; }
  const Dataset& dataset() const { return *ds_; }
  std::size_t offset() const { return begin_; }
  const std::string& name() const { return name_; }

 private:
  const Dataset* ds_;
  std::size_t begin_, count_;
  std::string name_;
};

/// Directory with manifest.txt (plain text, human readable) and data.bin
/// (versioned binary arrays with a checksum).
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
/// Throws IoError if missing, CorruptData on checksum, version or shape
/// mismatch.
Dataset load_dataset(const std::filesystem::path& dir);

/// One CSV per sample under dir (sample_<index>.csv) plus params.csv.
void export_csv(const std::filesystem::path& dir, const Dataset& ds);

}  // namespace ecgli::dataset
