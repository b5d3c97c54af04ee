#include "ecgli/fem/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ecgli/fem/grid.hpp"

namespace ecgli::fem {

Tensor Tensor::identity(int dim, double scale) {
  Tensor t;
  t.dim = dim;
  for (int i = 0; i < dim; ++i) t(i, i) = scale;
  return t;
}

Point3 Tensor::apply(const Point3& v) const {
  Point3 out{0, 0, 0};
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) out[i] += (*this)(i, j) * v[j];
  }
  return out;
}

Tensor transverse_iso_tensor(double sigma_l, double sigma_t, const Point3& fiber, int dim) {
  if (dim != 2 && dim != 3) throw InvalidArgument("tensor dimension must be 2 or 3");
  if (!(sigma_l > 0.0) || !(sigma_t > 0.0)) throw InvalidArgument("conductivities must be positive");
  double norm2 = 0.0;
  for (int i = 0; i < dim; ++i) norm2 += fiber[i] * fiber[i];
  for (int i = dim; i < 3; ++i) {
    if (fiber[i] != 0.0) throw InvalidArgument("fiber has components beyond the tensor dimension");
  }
  if (std::abs(norm2 - 1.0) > 1e-12) throw InvalidArgument("fiber direction is not a unit vector");
  Tensor t = Tensor::identity(dim, sigma_t);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) t(i, j) += (sigma_l - sigma_t) * fiber[i] * fiber[j];
  }
  return t;
}

namespace {

// Inverse of the leading dim x dim block; returns false when singular.
bool invert(const Tensor& a, Tensor& inv) {
  inv = Tensor{};
  inv.dim = a.dim;
  double scale = 0.0;
  for (double v : a.m) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  if (a.dim == 2) {
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    if (std::abs(det) <= 1e-14 * scale * scale) return false;
    inv(0, 0) = a(1, 1) / det;
    inv(0, 1) = -a(0, 1) / det;
    inv(1, 0) = -a(1, 0) / det;
    inv(1, 1) = a(0, 0) / det;
    return true;
  }
  const double c00 = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  const double c01 = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
  const double c02 = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  const double det = a(0, 0) * c00 + a(0, 1) * c01 + a(0, 2) * c02;
  if (std::abs(det) <= 1e-14 * scale * scale * scale) return false;
  inv(0, 0) = c00 / det;
  inv(1, 0) = c01 / det;
  inv(2, 0) = c02 / det;
  inv(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / det;
  inv(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / det;
  inv(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / det;
  inv(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / det;
  inv(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / det;
  inv(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / det;
  return true;
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  Tensor c;
  c.dim = a.dim;
  for (int i = 0; i < a.dim; ++i) {
    for (int j = 0; j < a.dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.dim; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

}  // namespace

Tensor monodomain_tensor(const Tensor& di, const Tensor& de) {
  if (di.dim != de.dim) throw InvalidArgument("monodomain_tensor: dimension mismatch");
  bool diagonal = true;
  for (int i = 0; i < di.dim; ++i) {
    for (int j = 0; j < di.dim; ++j) {
      if (i != j && (di(i, j) != 0.0 || de(i, j) != 0.0)) diagonal = false;
    }
  }
  if (diagonal) {
    Tensor out;
    out.dim = di.dim;
    for (int i = 0; i < di.dim; ++i) {
      const double s = di(i, i) + de(i, i);
      if (s == 0.0) throw NumericFailure("monodomain_tensor: Di + De is singular");
      out(i, i) = di(i, i) * de(i, i) / s;
    }
    return out;
  }
  Tensor sum;
  sum.dim = di.dim;
  for (int k = 0; k < 9; ++k) sum.m[k] = di.m[k] + de.m[k];
  Tensor inv;
  if (!invert(sum, inv)) throw NumericFailure("monodomain_tensor: Di + De is singular");
  Tensor out = multiply(multiply(di, inv), de);
  // Symmetrize away round-off; exact for commuting Di, De.
  for (int i = 0; i < out.dim; ++i) {
    for (int j = i + 1; j < out.dim; ++j) {
      const double s = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

std::vector<double> symmetric_eigenvalues(const Tensor& t) {
  const int n = t.dim;
  double a[3][3];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a[i][j] = t(i, j);
  }
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-300) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double tt = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tt * tt + 1.0);
        const double s = tt * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

std::vector<Point3> uniform_fibers(const StructuredGrid& grid, const Point3& fiber) {
  return std::vector<Point3>(grid.num_elements(), fiber);
}

std::vector<Point3> circumferential_fibers(const StructuredGrid& grid) {
  if (grid.dim() != 3 || !grid.ellipsoid() || !grid.curvilinear()) {
    throw InvalidArgument("circumferential fibers need an ellipsoidal shell grid");
  }
  const auto& curv = *grid.curvilinear();
  std::vector<Point3> fibers;
  fibers.reserve(grid.num_elements());
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    double r = 0, th = 0, ph = 0;
    const auto nodes = grid.element(e);
    for (auto id : nodes) {
      r += curv[3 * id];
      th += curv[3 * id + 1];
      ph += curv[3 * id + 2];
    }
    const double n = static_cast<double>(nodes.size());
    fibers.push_back(ellipsoid_phi_tangent(r / n, th / n, ph / n, *grid.ellipsoid()));
  }
  return fibers;
}

ConductivityTensorField transverse_iso_field(const StructuredGrid& grid, double sigma_l, double sigma_t,
                                             std::vector<Point3> fibers) {
  if (fibers.size() != grid.num_elements()) throw InvalidArgument("one fiber per element required");
  ConductivityTensorField field;
  field.tensors.reserve(fibers.size());
  for (const auto& f : fibers) field.tensors.push_back(transverse_iso_tensor(sigma_l, sigma_t, f, grid.dim()));
  field.fibers = std::move(fibers);
  return field;
}

ConductivityTensorField monodomain_field(const ConductivityTensorField& di, const ConductivityTensorField& de) {
  if (di.tensors.size() != de.tensors.size()) throw InvalidArgument("monodomain_field: length mismatch");
  ConductivityTensorField out;
  out.fibers = di.fibers;
  out.tensors.reserve(di.tensors.size());
  for (std::size_t e = 0; e < di.tensors.size(); ++e) out.tensors.push_back(monodomain_tensor(di.tensors[e], de.tensors[e]));
  return out;
}

}  // namespace ecgli::fem
