#pragma once

#include <array>
#include <vector>

#include "ecgli/common.hpp"

namespace ecgli::fem {

/// Symmetric conductivity tensor, stored as a full 3x3 row-major block.
/// For 2D tensors only the upper-left 2x2 block is meaningful and the rest is
/// zero.
struct Tensor {
  int dim = 2;
  std::array<double, 9> m{};

  double operator()(int i, int j) const { return m[3 * i + j]; }
  double& operator()(int i, int j) { return m[3 * i + j]; }

  static Tensor identity(int dim, double scale = 1.0);
  Point3 apply(const Point3& v) const;
  bool operator==(const Tensor&) const = default;
};

/// sigma_t I + (sigma_l - sigma_t) a a^T. The fiber must be a unit vector in
/// the first `dim` components (1e-12 tolerance).
Tensor transverse_iso_tensor(double sigma_l, double sigma_t, const Point3& fiber, int dim);

/// Di (Di + De)^{-1} De. Throws NumericFailure when Di + De is singular.
Tensor monodomain_tensor(const Tensor& di, const Tensor& de);

/// Eigenvalues of a symmetric tensor, ascending (Jacobi rotations).
std::vector<double> symmetric_eigenvalues(const Tensor& t);

/// One tensor and one fiber per element.
struct ConductivityTensorField {
  std::vector<Tensor> tensors;
  std::vector<Point3> fibers;
};

class StructuredGrid;

/// Constant fiber direction on every element.
std::vector<Point3> uniform_fibers(const StructuredGrid& grid, const Point3& fiber);

/// Shell default: fiber tangent to the phi coordinate line at each element
/// centroid.
std::vector<Point3> circumferential_fibers(const StructuredGrid& grid);

ConductivityTensorField transverse_iso_field(const StructuredGrid& grid, double sigma_l, double sigma_t,
                                             std::vector<Point3> fibers);

ConductivityTensorField monodomain_field(const ConductivityTensorField& di, const ConductivityTensorField& de);

}  // namespace ecgli::fem
