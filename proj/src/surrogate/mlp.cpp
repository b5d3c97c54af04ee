#include "ecgli/surrogate/mlp.hpp"

#include <cmath>

namespace ecgli::surrogate {

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw InvalidArgument("an MLP needs input and output widths");
  for (int w : widths_) {
    if (w < 1) throw InvalidArgument("MLP layer widths must be >= 1");
  }
  for (int l = 0; l + 1 < static_cast<int>(widths_.size()); ++l) {
    offsets_.push_back(offsets_.back() + static_cast<std::size_t>(widths_[l] + 1) * widths_[l + 1]);
  }
}

void Mlp::forward(std::span<const double> theta, std::span<const double> x, Tape& tape) const {
  if (static_cast<int>(x.size()) != input_size()) throw InvalidArgument("mlp_forward: input dimension mismatch");
  if (theta.size() != num_params()) throw InvalidArgument("mlp_forward: parameter vector has the wrong length");
  const int n_layers = num_layers();
  tape.act.resize(n_layers + 1);
  tape.act[0].assign(x.begin(), x.end());
  for (int l = 0; l < n_layers; ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const double* w = theta.data() + weight_offset(l);
    const double* b = theta.data() + bias_offset(l);
    const Vec& a = tape.act[l];
    Vec& z = tape.act[l + 1];
    z.resize(out);
    const bool hidden = l + 1 < n_layers;
    for (int i = 0; i < out; ++i) {
      double s = b[i];
      const double* row = w + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) s += row[j] * a[j];
      z[i] = hidden ? std::tanh(s) : s;
    }
  }
}

void Mlp::backward(std::span<const double> theta, const Tape& tape, std::span<const double> grad_out,
                   std::span<double> grad_theta, std::span<double> grad_x) const {
  const int n_layers = num_layers();
  if (static_cast<int>(grad_out.size()) != output_size()) throw InvalidArgument("mlp backward: output gradient size");
  if (grad_theta.size() != num_params()) throw InvalidArgument("mlp backward: parameter gradient size");
  Vec delta(grad_out.begin(), grad_out.end()), prev;
  for (int l = n_layers - 1; l >= 0; --l) {
    const int in = widths_[l], out = widths_[l + 1];
    if (l + 1 < n_layers) {
      // delta arrives as d/d(post-activation); convert through tanh.
      const Vec& z = tape.act[l + 1];
      for (int i = 0; i < out; ++i) delta[i] *= 1.0 - z[i] * z[i];
    }
    const double* w = theta.data() + weight_offset(l);
    double* gw = grad_theta.data() + weight_offset(l);
    double* gb = grad_theta.data() + bias_offset(l);
    const Vec& a = tape.act[l];
    const bool need_prev = l > 0 || !grad_x.empty();
    if (need_prev) prev.assign(in, 0.0);
    for (int i = 0; i < out; ++i) {
      const double d = delta[i];
      gb[i] += d;
      double* grow = gw + static_cast<std::size_t>(i) * in;
      const double* row = w + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) grow[j] += d * a[j];
      if (need_prev) {
        for (int j = 0; j < in; ++j) prev[j] += row[j] * d;
      }
    }
    if (need_prev) delta.swap(prev);
  }
  if (!grad_x.empty()) {
    if (static_cast<int>(grad_x.size()) != input_size()) throw InvalidArgument("mlp backward: input gradient size");
    for (int j = 0; j < input_size(); ++j) grad_x[j] = delta[j];
  }
}

void Mlp::initialize(std::span<double> theta, std::uint64_t seed) const {
  if (theta.size() != num_params()) throw InvalidArgument("mlp initialize: parameter vector has the wrong length");
  SplitMix64 rng(seed);
  for (int l = 0; l < num_layers(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    double* w = theta.data() + weight_offset(l);
    for (std::size_t k = 0; k < static_cast<std::size_t>(in) * out; ++k) w[k] = rng.uniform(-bound, bound);
    double* b = theta.data() + bias_offset(l);
    for (int i = 0; i < out; ++i) b[i] = 0.0;
  }
}

Vec mlp_forward(const Mlp& net, std::span<const double> theta, std::span<const double> x) {
  Mlp::Tape tape;
  net.forward(theta, x, tape);
  return tape.act.back();
}

}  // namespace ecgli::surrogate
