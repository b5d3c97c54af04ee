#include "ecgli/surrogate/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace ecgli::surrogate {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

struct Pair {
  Vec s, y;
  double rho;
};

/// Two-loop recursion: d = -H g.
Vec two_loop(const std::deque<Pair>& mem, std::span<const double> g) {
  Vec q(g.begin(), g.end());
  std::vector<double> alpha(mem.size());
  for (std::size_t k = mem.size(); k-- > 0;) {
    alpha[k] = mem[k].rho * dot(mem[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * mem[k].y[i];
  }
  double gamma = 1.0;
  if (!mem.empty()) gamma = dot(mem.back().s, mem.back().y) / dot(mem.back().y, mem.back().y);
  for (double& v : q) v *= gamma;
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double b = mem[k].rho * dot(mem[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += mem[k].s[i] * (alpha[k] - b);
  }
  for (double& v : q) v = -v;
  return q;
}

/// Minimizer of the cubic through (a, fa, ga), (b, fb, gb), safeguarded into
/// the interval.
double cubic_min(double a, double fa, double ga, double b, double fb, double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  double t;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
  } else {
    t = 0.5 * (a + b);
  }
  const double lo = std::min(a, b), hi = std::max(a, b), w = hi - lo;
  if (!std::isfinite(t) || t < lo + 0.1 * w || t > hi - 0.1 * w) t = 0.5 * (a + b);
  return t;
}

struct LineResult {
  bool ok = false;
  double alpha = 0.0;
  double f = 0.0;
  Vec x, g;
};

/// Strong-Wolfe line search (bracketing + zoom).
LineResult wolfe_search(const Objective& f, std::span<const double> x, double f0, std::span<const double> g0,
                        std::span<const double> d, double alpha_init, const LbfgsOptions& o) {
  const std::size_t n = x.size();
  const double dg0 = dot(g0, d);
  LineResult best;
  best.f = f0;
  auto eval = [&](double a, Vec& xa, Vec& ga) {
    xa.resize(n);
    ga.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) xa[i] = x[i] + a * d[i];
    const double fa = f(xa, ga);
    if (std::isfinite(fa) && fa < best.f) {
      best.f = fa;
      best.alpha = a;
      best.x = xa;
      best.g = ga;
    }
    return fa;
  };
  Vec xa, ga;
  double a_prev = 0.0, f_prev = f0, dg_prev = dg0;
  double a = alpha_init;
  int evals = 0;
  auto zoom = [&](double lo, double f_lo, double dg_lo, double hi, double f_hi, double dg_hi) -> LineResult {
    while (evals < o.max_line_search) {
      const double aj = cubic_min(lo, f_lo, dg_lo, hi, f_hi, dg_hi);
      const double fj = eval(aj, xa, ga);
      ++evals;
      const double dgj = dot(ga, d);
      if (!std::isfinite(fj) || fj > f0 + o.c1 * aj * dg0 || fj >= f_lo) {
        hi = aj;
        f_hi = std::isfinite(fj) ? fj : f_hi;
        dg_hi = std::isfinite(fj) ? dgj : dg_hi;
      } else {
        if (std::abs(dgj) <= -o.c2 * dg0) return {true, aj, fj, xa, ga};
        if (dgj * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
          dg_hi = dg_lo;
        }
        lo = aj;
        f_lo = fj;
        dg_lo = dgj;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    LineResult fail = best;
    fail.ok = false;
    return fail;
  };
  while (evals < o.max_line_search) {
    const double fa = eval(a, xa, ga);
    ++evals;
    if (!std::isfinite(fa)) {
      // Step blew up; shrink toward the last good point.
      a = 0.5 * (a_prev + a);
      continue;
    }
    const double dga = dot(ga, d);
    if (fa > f0 + o.c1 * a * dg0 || (evals > 1 && fa >= f_prev)) {
      return zoom(a_prev, f_prev, dg_prev, a, fa, dga);
    }
    if (std::abs(dga) <= -o.c2 * dg0) return {true, a, fa, xa, ga};
    if (dga >= 0.0) return zoom(a, fa, dga, a_prev, f_prev, dg_prev);
    a_prev = a;
    f_prev = fa;
    dg_prev = dga;
    a *= 2.0;
  }
  LineResult fail = best;
  fail.ok = false;
  return fail;
}

/// Projected Armijo backtracking along P(x + a d).
LineResult projected_search(const Objective& f, std::span<const double> x, double f0, std::span<const double> g0,
                            std::span<const double> d, const LbfgsOptions& o) {
  const std::size_t n = x.size();
  LineResult r;
  double a = 1.0;
  Vec xa(n), ga(n);
  for (int k = 0; k < o.max_line_search; ++k, a *= 0.5) {
    for (std::size_t i = 0; i < n; ++i) xa[i] = x[i] + a * d[i];
    o.box.project(xa);
    double decrease = 0.0;
    for (std::size_t i = 0; i < n; ++i) decrease += g0[i] * (xa[i] - x[i]);
    if (decrease >= 0.0) continue;
    std::fill(ga.begin(), ga.end(), 0.0);
    const double fa = f(xa, ga);
    if (std::isfinite(fa) && fa <= f0 + o.c1 * decrease) return {true, a, fa, xa, ga};
  }
  return r;
}

}  // namespace

void adam_step(std::span<double> x, std::span<const double> g, AdamMoments& mo, double lr, const AdamCoefficients& c) {
  if (x.size() != g.size() || mo.m.size() != x.size() || mo.v.size() != x.size()) {
    throw InvalidArgument("adam_step: size mismatch");
  }
  ++mo.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(mo.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(mo.step));
  for (std::size_t i = 0; i < x.size(); ++i) {
    mo.m[i] = c.beta1 * mo.m[i] + (1.0 - c.beta1) * g[i];
    mo.v[i] = c.beta2 * mo.v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double mh = mo.m[i] / bc1;
    const double vh = mo.v[i] / bc2;
    x[i] -= lr * mh / (std::sqrt(vh) + c.eps);
  }
}

void Box::project(std::span<double> x) const {
  if (empty()) return;
  if (lo.size() != x.size() || hi.size() != x.size()) throw InvalidArgument("project: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i]) x[i] = lo[i];
    if (x[i] > hi[i]) x[i] = hi[i];
  }
}

double projected_gradient_norm(std::span<const double> x, std::span<const double> g, const Box& box) {
  if (box.empty()) return inf_norm(g);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = std::clamp(x[i] - g[i], box.lo[i], box.hi[i]) - x[i];
    s = std::max(s, std::abs(moved));
  }
  return s;
}

LbfgsResult lbfgs_refine(const Objective& f, std::span<const double> x0, const LbfgsOptions& o) {
  if (o.memory < 1) throw InvalidArgument("lbfgs: memory must be >= 1");
  const std::size_t n = x0.size();
  LbfgsResult r;
  r.x.assign(x0.begin(), x0.end());
  o.box.project(r.x);
  Vec g(n, 0.0);
  r.f = f(r.x, g);
  if (!std::isfinite(r.f)) throw NumericFailure("lbfgs: non-finite objective at the starting point");
  r.history.push_back(r.f);
  std::deque<Pair> mem;
  for (int epoch = 0; epoch < o.max_epochs; ++epoch) {
    if (projected_gradient_norm(r.x, g, o.box) < o.grad_tol) {
      r.converged = true;
      break;
    }
    Vec d = two_loop(mem, g);
    if (!(dot(d, g) < 0.0)) {
      mem.clear();
      d.assign(g.begin(), g.end());
      for (double& v : d) v = -v;
    }
    double a0 = 1.0;
    if (mem.empty()) a0 = std::min(1.0, 1.0 / std::max(inf_norm(g), 1e-300));
    LineResult ls = o.box.empty() ? wolfe_search(f, r.x, r.f, g, d, a0, o) : projected_search(f, r.x, r.f, g, d, o);
    if (!ls.ok && !mem.empty()) {
      // Retry once along steepest descent with fresh memory.
      mem.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      a0 = std::min(1.0, 1.0 / std::max(inf_norm(g), 1e-300));
      ls = o.box.empty() ? wolfe_search(f, r.x, r.f, g, d, a0, o) : projected_search(f, r.x, r.f, g, d, o);
    }
    if (!ls.ok) {
      r.line_search_failed = true;
      if (!ls.x.empty() && ls.f < r.f) {
        r.x = std::move(ls.x);
        r.f = ls.f;
        r.epochs = epoch + 1;
        r.history.push_back(r.f);
      }
      break;
    }
    Pair p{Vec(n), Vec(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = ls.x[i] - r.x[i];
      p.y[i] = ls.g[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-12 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y)) && sy > 0.0) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > o.memory) mem.pop_front();
    }
    r.x = std::move(ls.x);
    g = std::move(ls.g);
    r.f = ls.f;
    r.epochs = epoch + 1;
    r.history.push_back(r.f);
    if (o.on_epoch) o.on_epoch(r.epochs, r.x, r.f);
  }
  if (!r.converged && projected_gradient_norm(r.x, g, o.box) < o.grad_tol) r.converged = true;
  return r;
}

}  // namespace ecgli::surrogate
