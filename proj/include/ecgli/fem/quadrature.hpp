#pragma once

#include <array>
#include <vector>

#include "ecgli/fem/grid.hpp"

namespace ecgli::fem {

/// Gauss-Legendre points and weights on [0, 1].
struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;
};
GaussRule gauss_rule(int n_points);

/// Per-quadrature-point data of one element: physical position, weight times
/// |det J|, shape values and physical shape gradients.
struct QuadraturePoint {
  Point3 x{};
  double jxw = 0.0;
  std::array<double, 8> phi{};
  std::array<Point3, 8> grad{};
};

/// Isoparametric Q1 evaluation of element `e` with a tensor Gauss rule of
/// `order` points per axis.
std::vector<QuadraturePoint> element_quadrature(const StructuredGrid& grid, std::size_t e, int order);

/// Same, for an arbitrary tensor rule given on [0, 1].
std::vector<QuadraturePoint> element_quadrature(const StructuredGrid& grid, std::size_t e, const GaussRule& rule);

/// Composite rule: `sub` x `sub` (x `sub`) sub-cells, each with `order`
/// Gauss points per axis.
std::vector<QuadraturePoint> element_quadrature_composite(const StructuredGrid& grid, std::size_t e,
                                                          int sub, int order);

}  // namespace ecgli::fem
