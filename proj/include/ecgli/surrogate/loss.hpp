#pragma once

#include <span>

#include "ecgli/common.hpp"
#include "ecgli/pecg/pecg.hpp"

namespace ecgli::surrogate {

/// Mean of squared differences over leads and times.
double loss_mse(const pecg::PecgSignal& pred, const pecg::PecgSignal& target);

/// loss_mse plus omega / (N_leads N_t) * sum over leads and frequencies of
/// |DFT(target) - DFT(pred)|^2. omega = 0 returns loss_mse exactly.
double loss_fft(const pecg::PecgSignal& pred, const pecg::PecgSignal& target, double omega);

/// Lead-major arrays of shape n_leads x n_t. When grad is non-empty it
/// receives d(loss)/d(pred).
double signal_loss(std::span<const double> pred, std::span<const double> target, std::size_t n_leads,
                   std::size_t n_t, double omega, std::span<double> grad);

/// sum_k |X_k|^2 of the unnormalized DFT of x; grad (if non-empty) receives
/// its derivative with respect to x.
double dft_energy(std::span<const double> x, std::span<double> grad);

}  // namespace ecgli::surrogate
