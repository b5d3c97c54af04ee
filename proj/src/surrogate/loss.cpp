#include "ecgli/surrogate/loss.hpp"

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>

namespace ecgli::surrogate {

namespace {

// Planning is not thread-safe in FFTW; execution with new-array functions
// is. Plans are made once per length and kept for the process lifetime.
struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

const PlanPair& plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  fftw_complex* a = fftw_alloc_complex(n);
  fftw_complex* b = fftw_alloc_complex(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int ni = static_cast<int>(n);
  PlanPair p{fftw_plan_dft_1d(ni, a, b, FFTW_FORWARD, flags), fftw_plan_dft_1d(ni, a, b, FFTW_BACKWARD, flags)};
  fftw_free(a);
  fftw_free(b);
  if (!p.forward || !p.backward) throw NumericFailure("FFTW could not create a plan");
  return cache.emplace(n, p).first->second;
}

void check_shape(const pecg::PecgSignal& a, const pecg::PecgSignal& b) {
  if (a.n_leads != b.n_leads || a.n_t != b.n_t || a.values.size() != b.values.size() ||
      a.values.size() != a.n_leads * a.n_t || a.values.empty()) {
    throw InvalidArgument("loss: signal shapes differ");
  }
}

}  // namespace

double dft_energy(std::span<const double> x, std::span<double> grad) {
  const std::size_t n = x.size();
  if (n == 0) return 0.0;
  const PlanPair& p = plans_for(n);
  std::vector<std::complex<double>> in(n), out(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = x[i];
  fftw_execute_dft(p.forward, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
  double e = 0.0;
  for (const auto& c : out) e += std::norm(c);
  if (!grad.empty()) {
    // d/dx sum |F x|^2 = 2 Re(F^H F x); F^H is the unnormalized backward transform.
    fftw_execute_dft(p.backward, reinterpret_cast<fftw_complex*>(out.data()),
                     reinterpret_cast<fftw_complex*>(in.data()));
    for (std::size_t i = 0; i < n; ++i) grad[i] = 2.0 * in[i].real();
  }
  return e;
}

double signal_loss(std::span<const double> pred, std::span<const double> target, std::size_t n_leads,
                   std::size_t n_t, double omega, std::span<double> grad) {
  const std::size_t total = n_leads * n_t;
  if (pred.size() != total || target.size() != total || total == 0) {
    throw InvalidArgument("loss: signal shapes differ");
  }
  if (!(omega >= 0.0)) throw InvalidArgument("loss: omega must be >= 0");
  if (!grad.empty() && grad.size() != total) throw InvalidArgument("loss: gradient size");
  const double inv = 1.0 / static_cast<double>(total);
  double mse = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    const double e = pred[i] - target[i];
    mse += e * e;
    if (!grad.empty()) grad[i] = 2.0 * e * inv;
  }
  mse *= inv;
  if (omega == 0.0) return mse;
  double spec = 0.0;
  Vec e(n_t), ge(grad.empty() ? 0 : n_t);
  for (std::size_t l = 0; l < n_leads; ++l) {
    for (std::size_t j = 0; j < n_t; ++j) e[j] = pred[l * n_t + j] - target[l * n_t + j];
    spec += dft_energy(e, ge);
    if (!grad.empty()) {
      for (std::size_t j = 0; j < n_t; ++j) grad[l * n_t + j] += omega * inv * ge[j];
    }
  }
  return mse + omega * inv * spec;
}

double loss_mse(const pecg::PecgSignal& pred, const pecg::PecgSignal& target) {
  check_shape(pred, target);
  return signal_loss(pred.values, target.values, pred.n_leads, pred.n_t, 0.0, {});
}

double loss_fft(const pecg::PecgSignal& pred, const pecg::PecgSignal& target, double omega) {
  check_shape(pred, target);
  return signal_loss(pred.values, target.values, pred.n_leads, pred.n_t, omega, {});
}

}  // namespace ecgli::surrogate
