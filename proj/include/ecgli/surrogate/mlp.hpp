#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecgli/common.hpp"
#include "ecgli/rng.hpp"

namespace ecgli::surrogate {

/// Fully connected network: tanh on hidden layers, identity on the output.
///
/// The network owns only its shape; parameters live in an external flat
/// vector so that several networks can share one optimizer state. Layer l
/// stores W_l (row-major, out x in) followed by b_l.
class Mlp {
 public:
  Mlp() = default;
  /// widths = {input, hidden..., output}; at least two entries, all >= 1.
  explicit Mlp(std::vector<int> widths);

  const std::vector<int>& widths() const { return widths_; }
  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  std::size_t num_params() const { return offsets_.back(); }

  /// Activations of one evaluation, kept for the backward pass.
  struct Tape {
    std::vector<Vec> act;  // act[0] = input, act[L] = output
  };

  void forward(std::span<const double> theta, std::span<const double> x, Tape& tape) const;
  /// Accumulates d(loss)/d(theta) into grad_theta and writes d(loss)/d(x)
  /// into grad_x (may be empty to skip).
  void backward(std::span<const double> theta, const Tape& tape, std::span<const double> grad_out,
                std::span<double> grad_theta, std::span<double> grad_x) const;

  /// Zero biases, weights uniform in +-sqrt(6 / (fan_in + fan_out)).
  void initialize(std::span<double> theta, std::uint64_t seed) const;

  bool operator==(const Mlp& o) const { return widths_ == o.widths_; }

 private:
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1];
  }

  std::vector<int> widths_;
  std::vector<std::size_t> offsets_{0};
};

/// Convenience: y = net(theta, x).
Vec mlp_forward(const Mlp& net, std::span<const double> theta, std::span<const double> x);

using ecgli::SplitMix64;

}  // namespace ecgli::surrogate
