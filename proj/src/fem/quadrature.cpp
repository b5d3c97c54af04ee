#include "ecgli/fem/quadrature.hpp"

#include <cmath>

namespace ecgli::fem {

GaussRule gauss_rule(int n) {
  if (n < 1) throw InvalidArgument("gauss_rule: need at least one point");
  GaussRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev guess, then map [-1,1] -> [0,1].
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged root.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

namespace {

/// Evaluates shape data at reference point xi in [0,1]^dim.
QuadraturePoint evaluate(const StructuredGrid& grid, std::span<const std::uint32_t> nodes, const Point3& xi,
                         double weight) {
  const int dim = grid.dim();
  const int npe = grid.nodes_per_element();
  QuadraturePoint q;
  std::array<Point3, 8> dref{};
  for (int l = 0; l < npe; ++l) {
    double f[3], df[3];
    for (int d = 0; d < 3; ++d) {
      const int bit = (l >> d) & 1;
      if (d < dim) {
        f[d] = bit ? xi[d] : 1.0 - xi[d];
        df[d] = bit ? 1.0 : -1.0;
      } else {
        f[d] = 1.0;
        df[d] = 0.0;
      }
    }
    q.phi[l] = f[0] * f[1] * f[2];
    dref[l] = {df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]};
  }
  // J(a, b) = d x_a / d xi_b
  double jac[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  for (int l = 0; l < npe; ++l) {
    const auto x = grid.node(nodes[l]);
    for (int a = 0; a < 3; ++a) q.x[a] += q.phi[l] * x[a];
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) jac[a][b] += x[a] * dref[l][b];
    }
  }
  double inv[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  double det = 0.0;
  if (dim == 2) {
    det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    inv[0][0] = jac[1][1] / det;
    inv[0][1] = -jac[0][1] / det;
    inv[1][0] = -jac[1][0] / det;
    inv[1][1] = jac[0][0] / det;
  } else {
    det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
          jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
          jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    inv[0][0] = (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) / det;
    inv[0][1] = (jac[0][2] * jac[2][1] - jac[0][1] * jac[2][2]) / det;
    inv[0][2] = (jac[0][1] * jac[1][2] - jac[0][2] * jac[1][1]) / det;
    inv[1][0] = (jac[1][2] * jac[2][0] - jac[1][0] * jac[2][2]) / det;
    inv[1][1] = (jac[0][0] * jac[2][2] - jac[0][2] * jac[2][0]) / det;
    inv[1][2] = (jac[0][2] * jac[1][0] - jac[0][0] * jac[1][2]) / det;
    inv[2][0] = (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]) / det;
    inv[2][1] = (jac[0][1] * jac[2][0] - jac[0][0] * jac[2][1]) / det;
    inv[2][2] = (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]) / det;
  }
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) throw NumericFailure("degenerate element Jacobian");
  q.jxw = weight * std::abs(det);
  // grad_x N = J^{-T} grad_xi N
  for (int l = 0; l < npe; ++l) {
    for (int a = 0; a < dim; ++a) {
      double s = 0.0;
      for (int b = 0; b < dim; ++b) s += inv[b][a] * dref[l][b];
      q.grad[l][a] = s;
    }
  }
  return q;
}

}  // namespace

std::vector<QuadraturePoint> element_quadrature(const StructuredGrid& grid, std::size_t e, const GaussRule& rule) {
  const int dim = grid.dim();
  const auto nodes = grid.element(e);
  const std::size_t n = rule.points.size();
  const std::size_t nz = dim == 3 ? n : 1;
  std::vector<QuadraturePoint> out;
  out.reserve(n * n * nz);
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const Point3 xi{rule.points[i], rule.points[j], dim == 3 ? rule.points[k] : 0.0};
        const double w = rule.weights[i] * rule.weights[j] * (dim == 3 ? rule.weights[k] : 1.0);
        out.push_back(evaluate(grid, nodes, xi, w));
      }
    }
  }
  return out;
}

std::vector<QuadraturePoint> element_quadrature(const StructuredGrid& grid, std::size_t e, int order) {
  return element_quadrature(grid, e, gauss_rule(order));
}

std::vector<QuadraturePoint> element_quadrature_composite(const StructuredGrid& grid, std::size_t e, int sub,
                                                          int order) {
  if (sub < 1) throw InvalidArgument("composite quadrature needs sub >= 1");
  const auto base = gauss_rule(order);
  GaussRule rule;
  for (int s = 0; s < sub; ++s) {
    for (std::size_t i = 0; i < base.points.size(); ++i) {
      rule.points.push_back((s + base.points[i]) / sub);
      rule.weights.push_back(base.weights[i] / sub);
    }
  }
  return element_quadrature(grid, e, rule);
}

}  // namespace ecgli::fem
