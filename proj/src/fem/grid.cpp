#include "ecgli/fem/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecgli/fem/quadrature.hpp"

namespace ecgli::fem {

namespace {

constexpr double kSlack = 1e-12;

double lerp(double lo, double hi, double r) { return lo + (hi - lo) * r; }

}  // namespace

void EllipsoidBounds::validate() const {
  if (!(a1 > 0 && b1 > 0 && c1 > 0 && a2 >= a1 && b2 >= b1 && c2 >= c1)) {
    throw InvalidArgument("ellipsoid semi-axis bounds must satisfy 0 < lo <= hi");
  }
  if (!(theta_max > theta_min) || !(phi_max > phi_min)) {
    throw InvalidArgument("ellipsoid angle ranges are degenerate");
  }
}

Point3 ellipsoid_map(double r, double theta, double phi, const EllipsoidBounds& b) {
  if (!(r >= -kSlack && r <= 1.0 + kSlack)) throw InvalidArgument("ellipsoid_map: r outside [0, 1]");
  if (!(theta >= b.theta_min - kSlack && theta <= b.theta_max + kSlack)) {
    throw InvalidArgument("ellipsoid_map: theta outside its range");
  }
  if (!(phi >= b.phi_min - kSlack && phi <= b.phi_max + kSlack)) {
    throw InvalidArgument("ellipsoid_map: phi outside its range");
  }
  const double a = lerp(b.a1, b.a2, r);
  const double bb = lerp(b.b1, b.b2, r);
  const double c = lerp(b.c1, b.c2, r);
  const double z = b.z_from_phi ? c * std::sin(phi) : c * std::sin(theta);
  return {a * std::cos(theta) * std::cos(phi), bb * std::cos(theta) * std::sin(phi), z};
}

Point3 ellipsoid_phi_tangent(double r, double theta, double phi, const EllipsoidBounds& b) {
  const double a = lerp(b.a1, b.a2, r);
  const double bb = lerp(b.b1, b.b2, r);
  const double c = lerp(b.c1, b.c2, r);
  Point3 t{-a * std::cos(theta) * std::sin(phi), bb * std::cos(theta) * std::cos(phi),
           b.z_from_phi ? c * std::cos(phi) : 0.0};
  const double n = std::sqrt(dot3(t, t));
  if (n == 0.0) throw NumericFailure("phi tangent vanishes");
  for (double& v : t) v /= n;
  return t;
}

std::array<int, 3> StructuredGrid::nodes_per_axis() const {
  return {n_elems_[0] + 1, n_elems_[1] + 1, dim_ == 3 ? n_elems_[2] + 1 : 1};
}

std::size_t StructuredGrid::node_index(int i, int j, int k) const {
  const auto n = nodes_per_axis();
  return (static_cast<std::size_t>(k) * n[1] + j) * n[0] + i;
}

Point3 StructuredGrid::element_centroid(std::size_t e) const {
  Point3 c{0, 0, 0};
  const auto nodes = element(e);
  for (auto id : nodes) {
    const auto x = node(id);
    for (int d = 0; d < 3; ++d) c[d] += x[d];
  }
  for (double& v : c) v /= static_cast<double>(nodes.size());
  return c;
}

std::pair<Point3, Point3> StructuredGrid::bounding_box() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Point3 lo{inf, inf, inf}, hi{-inf, -inf, -inf};
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], coords_[3 * i + d]);
      hi[d] = std::max(hi[d], coords_[3 * i + d]);
    }
  }
  return {lo, hi};
}

double StructuredGrid::measure() const {
  double total = 0.0;
  for (std::size_t e = 0; e < num_elements(); ++e) {
    for (const auto& q : element_quadrature(*this, e, 2)) total += q.jxw;
  }
  return total;
}

void StructuredGrid::build_connectivity() {
  const int npe = nodes_per_element();
  connectivity_.clear();
  const int nz = dim_ == 3 ? n_elems_[2] : 1;
  connectivity_.reserve(static_cast<std::size_t>(n_elems_[0]) * n_elems_[1] * nz * npe);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < n_elems_[1]; ++j) {
      for (int i = 0; i < n_elems_[0]; ++i) {
        for (int l = 0; l < npe; ++l) {
          const int di = l & 1, dj = (l >> 1) & 1, dk = (l >> 2) & 1;
          connectivity_.push_back(static_cast<std::uint32_t>(node_index(i + di, j + dj, k + dk)));
        }
      }
    }
  }
}

StructuredGrid StructuredGrid::from_arrays(int dim, std::array<int, 3> n_elems, std::vector<double> coords,
                                           std::vector<std::uint32_t> connectivity) {
  if (dim != 2 && dim != 3) throw InvalidArgument("grid dimension must be 2 or 3");
  StructuredGrid g;
  g.dim_ = dim;
  g.n_elems_ = n_elems;
  if (coords.size() % 3 != 0) throw InvalidArgument("coordinate array length not a multiple of 3");
  const auto npe = static_cast<std::size_t>(g.nodes_per_element());
  if (connectivity.size() % npe != 0) throw InvalidArgument("connectivity length mismatch");
  const std::size_t n_nodes = coords.size() / 3;
  for (auto id : connectivity) {
    if (id >= n_nodes) throw InvalidArgument("connectivity references a missing node");
  }
  g.coords_ = std::move(coords);
  g.connectivity_ = std::move(connectivity);
  return g;
}

StructuredGrid build_rect_grid(int nx, int ny, double lx, double ly) {
  if (nx < 1 || ny < 1) throw InvalidArgument("build_rect_grid: element counts must be >= 1");
  if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidArgument("build_rect_grid: lengths must be positive");
  StructuredGrid g;
  g.dim_ = 2;
  g.n_elems_ = {nx, ny, 0};
  const double hx = lx / nx, hy = ly / ny;
  g.coords_.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * 3);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      g.coords_.push_back(i * hx);
      g.coords_.push_back(j * hy);
      g.coords_.push_back(0.0);
    }
  }
  g.build_connectivity();
  return g;
}

StructuredGrid build_ellipsoid_grid(int ni, int nj, int nk, const EllipsoidBounds& bounds) {
  if (ni < 1 || nj < 1 || nk < 1) throw InvalidArgument("build_ellipsoid_grid: element counts must be >= 1");
  bounds.validate();
  StructuredGrid g;
  g.dim_ = 3;
  g.n_elems_ = {ni, nj, nk};
  g.ellipsoid_ = bounds;
  std::vector<double> curv;
  const std::size_t n = static_cast<std::size_t>(ni + 1) * (nj + 1) * (nk + 1);
  g.coords_.reserve(3 * n);
  curv.reserve(3 * n);
  for (int k = 0; k <= nk; ++k) {
    const double r = static_cast<double>(k) / nk;
    for (int j = 0; j <= nj; ++j) {
      const double theta = bounds.theta_min + (bounds.theta_max - bounds.theta_min) * j / nj;
      for (int i = 0; i <= ni; ++i) {
        const double phi = bounds.phi_min + (bounds.phi_max - bounds.phi_min) * i / ni;
        const auto x = ellipsoid_map(r, theta, phi, bounds);
        g.coords_.insert(g.coords_.end(), x.begin(), x.end());
        curv.insert(curv.end(), {r, theta, phi});
      }
    }
  }
  g.curvilinear_ = std::move(curv);
  g.build_connectivity();
  return g;
}

}  // namespace ecgli::fem
