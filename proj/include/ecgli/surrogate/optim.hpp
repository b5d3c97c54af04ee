#pragma once

#include <functional>
#include <optional>
#include <span>

#include "ecgli/common.hpp"

namespace ecgli::surrogate {

/// f(x), writing the gradient into g (same length as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> g)>;

struct AdamMoments {
  Vec m;
  Vec v;
  long step = 0;

  explicit AdamMoments(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  bool operator==(const AdamMoments&) const = default;
};

struct AdamCoefficients {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place; increments moments.step.
void adam_step(std::span<double> x, std::span<const double> g, AdamMoments& moments, double lr,
               const AdamCoefficients& c = {});

/// Coordinate-wise box; empty lo/hi means unconstrained.
struct Box {
  Vec lo;
  Vec hi;

  bool empty() const { return lo.empty(); }
  /// Clamp in place. Idempotent; only violated coordinates move.
  void project(std::span<double> x) const;
};

struct LbfgsOptions {
  int max_epochs = 100;
  int memory = 20;
  double grad_tol = 1e-10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 30;
  /// With a box, steps are projected and the search is a projected Armijo
  /// backtracking (curvature conditions do not survive projection).
  Box box;
  /// Called after every accepted epoch with (epoch, x, f).
  std::function<void(int, std::span<const double>, double)> on_epoch;
};

struct LbfgsResult {
  Vec x;
  double f = 0.0;
  int epochs = 0;
  bool converged = false;
  /// Set when the line search could not satisfy its conditions; x is the
  /// best point found.
  bool line_search_failed = false;
  std::vector<double> history;  // f after each epoch, starting with f(x0)
};

LbfgsResult lbfgs_refine(const Objective& f, std::span<const double> x0, const LbfgsOptions& opts);

/// Infinity norm of the projected gradient (plain gradient when unconstrained).
double projected_gradient_norm(std::span<const double> x, std::span<const double> g, const Box& box);

}  // namespace ecgli::surrogate
