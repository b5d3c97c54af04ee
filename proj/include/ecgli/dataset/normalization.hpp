#pragma once

#include <span>

#include "ecgli/common.hpp"

namespace ecgli::dataset {

/// Affine maps used by the surrogate: each parameter coordinate to [-1, 1]
/// from its training min/max, and all signals by one global offset/scale so
/// the training signals span [-1, 1].
struct Normalization {
  Vec p_min;
  Vec p_max;
  double signal_offset = 0.0;
  double signal_scale = 1.0;

  std::size_t dim() const { return p_min.size(); }

  Vec normalize_params(std::span<const double> p) const;
  Vec denormalize_params(std::span<const double> q) const;
  /// d(normalized)/d(physical) per coordinate.
  Vec param_jacobian() const;

  double normalize_signal(double s) const { return (s - signal_offset) / signal_scale; }
  double denormalize_signal(double s) const { return s * signal_scale + signal_offset; }
  Vec normalize_signal(std::span<const double> s) const;
  Vec denormalize_signal(std::span<const double> s) const;

  /// Range of normalized training signals (2 by construction).
  double normalized_signal_range() const { return 2.0; }

  bool operator==(const Normalization&) const = default;
};

/// Builds the maps from training parameters and signal values. Throws
/// InvalidArgument if a coordinate or the signals are constant.
Normalization fit_normalization(const std::vector<Vec>& params, const std::vector<const Vec*>& signals);

}  // namespace ecgli::dataset
