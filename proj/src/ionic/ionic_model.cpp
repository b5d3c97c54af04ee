#include "ecgli/ionic/ionic_model.hpp"

#include <algorithm>
#include <cmath>

namespace ecgli::ionic {

void IonicModel::concentration_rates(double, std::span<const double>, std::span<const double>,
                                     std::span<const double>, std::span<double> dc) const {
  std::fill(dc.begin(), dc.end(), 0.0);
}

void IonicModel::concentration_jacobian(double v, std::span<const double> w, std::span<const double> c,
                                        std::span<const double> params, std::span<double> jac) const {
  const int n = concentration_size();
  Vec cp(c.begin(), c.end()), fp(n), fm(n);
  for (int j = 0; j < n; ++j) {
    const double h = 1e-7 * std::max(1.0, std::abs(c[j]));
    cp[j] = c[j] + h;
    concentration_rates(v, w, cp, params, fp);
    cp[j] = c[j] - h;
    concentration_rates(v, w, cp, params, fm);
    cp[j] = c[j];
    for (int i = 0; i < n; ++i) jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
  }
}

int IonicModel::parameter_index(const std::string& name) const {
  const auto& names = parameter_names();
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

IonicRhs ionic_rhs(const IonicModel& model, double v, std::span<const double> w, std::span<const double> c,
                   std::span<const double> params) {
  if (static_cast<int>(w.size()) != model.gating_size() || static_cast<int>(c.size()) != model.concentration_size() ||
      params.size() != model.baseline_parameters().size()) {
    throw InvalidArgument("ionic_rhs: state or parameter dimension mismatch");
  }
  const auto finite = [](double x) { return std::isfinite(x); };
  if (!std::isfinite(v) || !std::all_of(w.begin(), w.end(), finite) || !std::all_of(c.begin(), c.end(), finite)) {
    throw NumericFailure("ionic_rhs: non-finite state");
  }
  IonicRhs out;
  out.i_ion = model.ion_current(v, w, c, params);
  out.dw.resize(w.size());
  out.dc.resize(c.size());
  model.gating_rates(v, w, params, out.dw);
  model.concentration_rates(v, w, c, params, out.dc);
  return out;
}

namespace {

constexpr double kResidualTol = 1e-10;
constexpr int kMaxIterations = 50;
constexpr int kMaxHalvings = 5;

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

// Dense Gaussian elimination with partial pivoting; n is tiny.
void solve_dense(int n, Vec& a, Vec& b) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    if (a[piv * n + col] == 0.0) throw NumericFailure("singular Newton Jacobian");
    if (piv != col) {
      for (int k = 0; k < n; ++k) std::swap(a[col * n + k], a[piv * n + k]);
      std::swap(b[col], b[piv]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (int k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      b[r] -= f * b[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < n; ++k) s -= a[r * n + k] * b[k];
    b[r] = s / a[r * n + r];
  }
}

// Solves x - x_n - dt F(x) = 0 by damped Newton.
template <typename Rates, typename Jacobian>
void backward_euler(int n, std::span<const double> x_n, double dt, std::span<double> x, Rates&& rates,
                    Jacobian&& jacobian, std::size_t node, const char* what) {
  if (n == 0) return;
  std::copy(x_n.begin(), x_n.end(), x.begin());
  if (n == 1) {
    // Scalar path, same iteration without heap traffic.
    double fx = 0.0, jx = 0.0;
    const auto residual1 = [&](double y) {
      rates(std::span<const double>(&y, 1), std::span<double>(&fx, 1));
      return y - x_n[0] - dt * fx;
    };
    double g1 = residual1(x[0]);
    for (int it = 0; it < kMaxIterations && !(std::abs(g1) < kResidualTol); ++it) {
      jacobian(std::span<const double>(x.data(), 1), std::span<double>(&jx, 1));
      const double step1 = g1 / (1.0 - dt * jx);
      double lambda = 1.0, trial1 = x[0], gt = g1;
      for (int h = 0; h <= kMaxHalvings; ++h) {
        trial1 = x[0] - lambda * step1;
        gt = residual1(trial1);
        if (std::isfinite(gt) && std::abs(gt) < std::abs(g1)) break;
        if (h < kMaxHalvings) lambda *= 0.5;
      }
      if (!std::isfinite(gt)) break;
      x[0] = trial1;
      g1 = gt;
    }
    if (std::abs(g1) < kResidualTol) return;
    throw NumericFailure(std::string("implicit ") + what + " update did not converge at node " +
                         std::to_string(node) + " (residual " + std::to_string(std::abs(g1)) + ")");
  }
  Vec f(n), g(n), jac(n * n), trial(n), step(n);
  const auto residual = [&](std::span<const double> y, Vec& out) {
    rates(y, f);
    for (int i = 0; i < n; ++i) out[i] = y[i] - x_n[i] - dt * f[i];
    return norm_inf(out);
  };
  double res = residual(x, g);
  for (int it = 0; it < kMaxIterations; ++it) {
    if (res < kResidualTol) return;
    jacobian(x, jac);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) jac[i * n + j] = (i == j ? 1.0 : 0.0) - dt * jac[i * n + j];
    }
    step = g;
    solve_dense(n, jac, step);
    double lambda = 1.0;
    Vec g_trial(n);
    double res_trial = 0.0;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      for (int i = 0; i < n; ++i) trial[i] = x[i] - lambda * step[i];
      res_trial = residual(trial, g_trial);
      if (std::isfinite(res_trial) && res_trial < res) break;
      if (h < kMaxHalvings) lambda *= 0.5;
    }
    if (!std::isfinite(res_trial)) break;
    std::copy(trial.begin(), trial.end(), x.begin());
    g = g_trial;
    res = res_trial;
  }
  if (res < kResidualTol) return;
  throw NumericFailure(std::string("implicit ") + what + " update did not converge at node " +
                       std::to_string(node) + " (residual " + std::to_string(res) + ")");
}

}  // namespace

void implicit_reaction_step(const IonicModel& model, double v, std::span<const double> w_n,
                            std::span<const double> c_n, double dt, std::span<const double> params,
                            std::span<double> w_next, std::span<double> c_next, std::size_t node) {
  if (!(dt > 0.0)) throw InvalidArgument("implicit_reaction_step: dt must be positive");
  const int sw = model.gating_size();
  const int sc = model.concentration_size();
  if (static_cast<int>(w_n.size()) != sw || static_cast<int>(w_next.size()) != sw ||
      static_cast<int>(c_n.size()) != sc || static_cast<int>(c_next.size()) != sc) {
    throw InvalidArgument("implicit_reaction_step: state dimension mismatch");
  }
  backward_euler(
      sw, w_n, dt, w_next, [&](std::span<const double> w, std::span<double> f) { model.gating_rates(v, w, params, f); },
      [&](std::span<const double> w, std::span<double> j) { model.gating_jacobian(v, w, params, j); }, node, "gating");
  const std::span<const double> w_fixed(w_next.data(), w_next.size());
  backward_euler(
      sc, c_n, dt, c_next,
      [&](std::span<const double> c, std::span<double> f) { model.concentration_rates(v, w_fixed, c, params, f); },
      [&](std::span<const double> c, std::span<double> j) { model.concentration_jacobian(v, w_fixed, c, params, j); },
      node, "concentration");
}

AlievPanfilov::AlievPanfilov()
    : names_{"k", "a", "eps0", "mu1", "mu2", "time_scale", "v_rest", "v_amp", "excitability_scale", "rest_shift"},
      baseline_{8.0, 0.15, 0.002, 0.2, 0.3, 12.9, -80.0, 100.0, 1.0, 0.0},
      lower_{0.0, 0.0, 0.0, 0.0, 1e-3, 1e-3, -150.0, 1.0, 0.0, -0.5},
      upper_{50.0, 0.5, 1.0, 5.0, 5.0, 1000.0, 50.0, 300.0, 10.0, 0.5} {}

double AlievPanfilov::normalized(double v, std::span<const double> p) { return (v - p[kVRest]) / p[kVAmp]; }

double AlievPanfilov::ion_current(double v, std::span<const double> w, std::span<const double>,
                                  std::span<const double> p) const {
  const double u = normalized(v, p) - p[kRestShift];
  const double cubic = p[kExcitability] * p[kK] * u * (u - p[kA]) * (u - 1.0);
  return p[kVAmp] / p[kTimeScale] * (cubic + u * w[0]);
}

void AlievPanfilov::gating_rates(double v, std::span<const double> w, std::span<const double> p,
                                 std::span<double> dw) const {
  const double u = normalized(v, p) - p[kRestShift];
  const double eps = p[kEps0] + p[kMu1] * w[0] / (u + p[kMu2]);
  dw[0] = eps * (-w[0] - p[kK] * u * (u - p[kA] - 1.0)) / p[kTimeScale];
}

void AlievPanfilov::gating_jacobian(double v, std::span<const double> w, std::span<const double> p,
                                    std::span<double> jac) const {
  const double u = normalized(v, p) - p[kRestShift];
  const double eps = p[kEps0] + p[kMu1] * w[0] / (u + p[kMu2]);
  const double deps = p[kMu1] / (u + p[kMu2]);
  const double drive = -w[0] - p[kK] * u * (u - p[kA] - 1.0);
  jac[0] = (deps * drive - eps) / p[kTimeScale];
}

NodeState AlievPanfilov::resting_state(std::span<const double> p) const {
  return NodeState{p[kVRest] + p[kVAmp] * p[kRestShift], Vec{0.0}, Vec{}};
}

std::unique_ptr<IonicModel> make_model(const std::string& name) {
  if (name == "aliev-panfilov") return std::make_unique<AlievPanfilov>();
  throw InvalidArgument("unknown ionic model '" + name + "'");
}

}  // namespace ecgli::ionic
