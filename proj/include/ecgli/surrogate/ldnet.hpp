#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecgli/dataset/normalization.hpp"
#include "ecgli/pecg/pecg.hpp"
#include "ecgli/surrogate/mlp.hpp"

namespace ecgli::surrogate {

/// Latent dynamics network: ds/dt = dyn(s, p), s(0) = 0, forward Euler with
/// step dt on the nondimensional interval [0, 1]; y(t_n) = rec(s(t_n)).
///
/// theta holds the dynamics parameters followed by the reconstruction ones.
struct SurrogateModel {
  Mlp dyn;
  Mlp rec;
  int n_s = 0;
  int n_p = 0;
  int n_leads = 0;
  int n_t = 0;
  double dt = 0.0;
  Vec theta;
  /// Physical time axis of the produced signals.
  double signal_t0 = 0.0;
  double signal_dt = 1.0;
  dataset::Normalization norm;

  std::size_t dyn_size() const { return dyn.num_params(); }
  std::span<const double> theta_dyn() const { return {theta.data(), dyn_size()}; }
  std::span<const double> theta_rec() const { return {theta.data() + dyn_size(), rec.num_params()}; }

  /// Shapes chain, dt (N_t - 1) = 1 within 1e-12, theta finite.
  void validate() const;
  bool operator==(const SurrogateModel&) const = default;
};

struct SurrogateShape {
  int n_p = 2;
  int n_leads = 1;
  int n_s = 8;
  int n_t = 200;
  std::vector<int> dyn_hidden{8, 8};
  std::vector<int> rec_hidden{16, 16};
  /// 0 means 1 / (n_t - 1).
  double dt = 0.0;
};

/// Builds and initializes a model (Glorot-uniform weights from `seed`).
SurrogateModel make_surrogate(const SurrogateShape& shape, const dataset::Normalization& norm, double signal_t0,
                              double signal_dt, std::uint64_t seed);

/// Latent states, row-major N_t x n_s. Throws NumericFailure naming the
/// step at which a state becomes non-finite.
Vec latent_rollout(const SurrogateModel& model, std::span<const double> p_norm);
Vec latent_rollout(const SurrogateModel& model, std::span<const double> theta, std::span<const double> p_norm);

/// Normalized output, lead-major N_leads x N_t.
Vec forward_normalized(const SurrogateModel& model, std::span<const double> theta, std::span<const double> p_norm);

/// Physical-unit signal for physical parameters p.
pecg::PecgSignal surrogate_forward(const SurrogateModel& model, std::span<const double> p);

/// Reusable buffers for one forward/backward pass.
struct Workspace {
  Vec states;
  Vec output;
  std::vector<Mlp::Tape> dyn_tapes;
  std::vector<Mlp::Tape> rec_tapes;
  Vec lambda, lambda_next, grad_in, grad_rec_x;
};

/// Forward pass that keeps the tapes; result left in ws.output (lead-major).
void forward_record(const SurrogateModel& model, std::span<const double> theta, std::span<const double> p_norm,
                    Workspace& ws);

/// Backpropagation through time for d(loss)/d(output) = grad_output
/// (lead-major). Accumulates into grad_theta (may be empty) and writes
/// d(loss)/d(p_norm) into grad_p (may be empty).
void backward_record(const SurrogateModel& model, std::span<const double> theta, Workspace& ws,
                     std::span<const double> grad_output, std::span<double> grad_theta, std::span<double> grad_p);

/// Largest |s| component over the rollout, for the stability contract.
double latent_sup_norm(const SurrogateModel& model, std::span<const double> p);

}  // namespace ecgli::surrogate
