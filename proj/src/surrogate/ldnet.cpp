#include "ecgli/surrogate/ldnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ecgli::surrogate {

namespace {

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void check_inputs(const SurrogateModel& m, std::span<const double> theta, std::span<const double> p_norm) {
  if (theta.size() != m.theta.size()) throw InvalidArgument("surrogate: parameter vector has the wrong length");
  if (static_cast<int>(p_norm.size()) != m.n_p) throw InvalidArgument("surrogate: parameter dimension mismatch");
}

}  // namespace

void SurrogateModel::validate() const {
  if (n_s < 1 || n_p < 1 || n_leads < 1 || n_t < 2) throw InvalidArgument("surrogate: dimensions must be positive");
  if (dyn.input_size() != n_s + n_p || dyn.output_size() != n_s) {
    throw InvalidArgument("surrogate: dynamics network must map n_s + n_p to n_s");
  }
  if (rec.input_size() != n_s || rec.output_size() != n_leads) {
    throw InvalidArgument("surrogate: reconstruction network must map n_s to N_leads");
  }
  if (theta.size() != dyn.num_params() + rec.num_params()) throw InvalidArgument("surrogate: theta length mismatch");
  if (!(dt > 0.0) || std::abs(dt * (n_t - 1) - 1.0) > 1e-12) {
    throw InvalidArgument("surrogate: latent step must satisfy dt (N_t - 1) = 1");
  }
  if (!all_finite(theta)) throw NumericFailure("surrogate: non-finite parameters");
  if (static_cast<int>(norm.dim()) != n_p) throw InvalidArgument("surrogate: normalization dimension mismatch");
}

SurrogateModel make_surrogate(const SurrogateShape& shape, const dataset::Normalization& norm, double signal_t0,
                              double signal_dt, std::uint64_t seed) {
  if (shape.n_t < 2) throw InvalidArgument("surrogate: N_t must be >= 2");
  SurrogateModel m;
  m.n_s = shape.n_s;
  m.n_p = shape.n_p;
  m.n_leads = shape.n_leads;
  m.n_t = shape.n_t;
  m.dt = shape.dt > 0.0 ? shape.dt : 1.0 / (shape.n_t - 1);
  std::vector<int> dw{shape.n_s + shape.n_p};
  dw.insert(dw.end(), shape.dyn_hidden.begin(), shape.dyn_hidden.end());
  dw.push_back(shape.n_s);
  std::vector<int> rw{shape.n_s};
  rw.insert(rw.end(), shape.rec_hidden.begin(), shape.rec_hidden.end());
  rw.push_back(shape.n_leads);
  m.dyn = Mlp(dw);
  m.rec = Mlp(rw);
  m.theta.assign(m.dyn.num_params() + m.rec.num_params(), 0.0);
  SplitMix64 seeds(seed);
  m.dyn.initialize(std::span<double>(m.theta.data(), m.dyn.num_params()), seeds.next());
  m.rec.initialize(std::span<double>(m.theta.data() + m.dyn.num_params(), m.rec.num_params()), seeds.next());
  m.signal_t0 = signal_t0;
  m.signal_dt = signal_dt;
  m.norm = norm;
  m.validate();
  return m;
}

void forward_record(const SurrogateModel& m, std::span<const double> theta, std::span<const double> p_norm,
                    Workspace& ws) {
  check_inputs(m, theta, p_norm);
  const auto td = theta.subspan(0, m.dyn_size());
  const auto tr = theta.subspan(m.dyn_size());
  const int ns = m.n_s, nt = m.n_t;
  ws.states.assign(static_cast<std::size_t>(nt) * ns, 0.0);
  ws.output.resize(static_cast<std::size_t>(m.n_leads) * nt);
  ws.dyn_tapes.resize(nt - 1);
  ws.rec_tapes.resize(nt);
  Vec in(ns + m.n_p);
  std::copy(p_norm.begin(), p_norm.end(), in.begin() + ns);
  for (int n = 0; n < nt; ++n) {
    std::span<const double> s(ws.states.data() + static_cast<std::size_t>(n) * ns, ns);
    m.rec.forward(tr, s, ws.rec_tapes[n]);
    const Vec& y = ws.rec_tapes[n].act.back();
    for (int l = 0; l < m.n_leads; ++l) ws.output[static_cast<std::size_t>(l) * nt + n] = y[l];
    if (n + 1 == nt) break;
    std::copy(s.begin(), s.end(), in.begin());
    m.dyn.forward(td, in, ws.dyn_tapes[n]);
    const Vec& f = ws.dyn_tapes[n].act.back();
    double* next = ws.states.data() + static_cast<std::size_t>(n + 1) * ns;
    for (int i = 0; i < ns; ++i) next[i] = s[i] + m.dt * f[i];
    if (!all_finite({next, static_cast<std::size_t>(ns)})) {
      throw NumericFailure("latent state became non-finite at step " + std::to_string(n + 1));
    }
  }
}

void backward_record(const SurrogateModel& m, std::span<const double> theta, Workspace& ws,
                     std::span<const double> grad_output, std::span<double> grad_theta, std::span<double> grad_p) {
  const int ns = m.n_s, nt = m.n_t, nl = m.n_leads;
  if (grad_output.size() != static_cast<std::size_t>(nl) * nt) throw InvalidArgument("surrogate: output gradient size");
  const auto td = theta.subspan(0, m.dyn_size());
  const auto tr = theta.subspan(m.dyn_size());
  // Scratch gradients so callers may skip theta.
  Vec scratch;
  std::span<double> gd, gr;
  if (grad_theta.empty()) {
    scratch.assign(theta.size(), 0.0);
    gd = std::span<double>(scratch.data(), m.dyn_size());
    gr = std::span<double>(scratch.data() + m.dyn_size(), m.rec.num_params());
  } else {
    if (grad_theta.size() != theta.size()) throw InvalidArgument("surrogate: theta gradient size");
    gd = grad_theta.subspan(0, m.dyn_size());
    gr = grad_theta.subspan(m.dyn_size());
  }
  if (!grad_p.empty()) {
    if (static_cast<int>(grad_p.size()) != m.n_p) throw InvalidArgument("surrogate: p gradient size");
    std::fill(grad_p.begin(), grad_p.end(), 0.0);
  }
  ws.lambda.assign(ns, 0.0);
  ws.grad_rec_x.resize(ns);
  ws.grad_in.resize(ns + m.n_p);
  Vec gy(nl);
  // lambda holds dL/ds_{n+1} on entry to iteration n.
  for (int n = nt - 1; n >= 0; --n) {
    if (n + 1 < nt) {
      Vec& g = ws.lambda_next;
      g.resize(ns);
      for (int i = 0; i < ns; ++i) g[i] = m.dt * ws.lambda[i];
      m.dyn.backward(td, ws.dyn_tapes[n], g, gd, ws.grad_in);
      for (int i = 0; i < ns; ++i) ws.lambda[i] += ws.grad_in[i];
      if (!grad_p.empty()) {
        for (int k = 0; k < m.n_p; ++k) grad_p[k] += ws.grad_in[ns + k];
      }
    }
    for (int l = 0; l < nl; ++l) gy[l] = grad_output[static_cast<std::size_t>(l) * nt + n];
    m.rec.backward(tr, ws.rec_tapes[n], gy, gr, ws.grad_rec_x);
    for (int i = 0; i < ns; ++i) ws.lambda[i] += ws.grad_rec_x[i];
  }
}

Vec latent_rollout(const SurrogateModel& m, std::span<const double> theta, std::span<const double> p_norm) {
  Workspace ws;
  forward_record(m, theta, p_norm, ws);
  return ws.states;
}

Vec latent_rollout(const SurrogateModel& m, std::span<const double> p_norm) {
  return latent_rollout(m, m.theta, p_norm);
}

Vec forward_normalized(const SurrogateModel& m, std::span<const double> theta, std::span<const double> p_norm) {
  Workspace ws;
  forward_record(m, theta, p_norm, ws);
  return ws.output;
}

pecg::PecgSignal surrogate_forward(const SurrogateModel& m, std::span<const double> p) {
  const Vec q = m.norm.normalize_params(p);
  pecg::PecgSignal s;
  s.n_leads = m.n_leads;
  s.n_t = m.n_t;
  s.t0 = m.signal_t0;
  s.dt = m.signal_dt;
  s.values = m.norm.denormalize_signal(forward_normalized(m, m.theta, q));
  return s;
}

double latent_sup_norm(const SurrogateModel& m, std::span<const double> p) {
  const Vec s = latent_rollout(m, m.norm.normalize_params(p));
  double sup = 0.0;
  for (double v : s) sup = std::max(sup, std::abs(v));
  return sup;
}

}  // namespace ecgli::surrogate
