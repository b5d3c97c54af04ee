#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "ecgli/common.hpp"

namespace ecgli::fem {

/// Semi-axis ranges and curvilinear box of the ellipsoidal shell.
///
/// The semi-axes a(r), b(r), c(r) interpolate linearly between the inner
/// (r = 0) and outer (r = 1) bounds. Angles are in radians: theta is the
/// elevation, phi the azimuth.
struct EllipsoidBounds {
  double a1 = 2.2, a2 = 3.3;
  double b1 = 2.2, b2 = 3.3;
  double c1 = 5.9, c2 = 6.4;
  double theta_min = -3.0 * std::numbers::pi / 8.0;
  double theta_max = std::numbers::pi / 8.0;
  double phi_min = -3.0 * std::numbers::pi / 2.0;
  double phi_max = std::numbers::pi / 2.0;
  /// Use z = c(r) sin(phi) instead of the standard z = c(r) sin(theta).
  bool z_from_phi = false;

  void validate() const;
};

/// Maps curvilinear (r, theta, phi) to cartesian cm. Throws InvalidArgument
/// for inputs outside the box (1e-12 slack).
Point3 ellipsoid_map(double r, double theta, double phi, const EllipsoidBounds& bounds);

/// Unit tangent of the phi coordinate line through (r, theta, phi).
Point3 ellipsoid_phi_tangent(double r, double theta, double phi, const EllipsoidBounds& bounds);

/// Structured Q1 mesh. 2D meshes live in the z = 0 plane.
///
/// Nodes are numbered lexicographically with the first axis fastest. For the
/// shell the axes are (phi, theta, r): index i runs along phi, j along theta
/// and k along r, so k = 0 is the inner surface. Element-local node order is
/// lexicographic as well: local node l has reference offsets
/// (l & 1, (l >> 1) & 1, (l >> 2) & 1).
class StructuredGrid {
 public:
  int dim() const { return dim_; }
  int nodes_per_element() const { return dim_ == 2 ? 4 : 8; }
  std::array<int, 3> elements_per_axis() const { return n_elems_; }
  std::array<int, 3> nodes_per_axis() const;

  std::size_t num_nodes() const { return coords_.size() / 3; }
  std::size_t num_elements() const { return connectivity_.size() / nodes_per_element(); }

  Point3 node(std::size_t i) const { return {coords_[3 * i], coords_[3 * i + 1], coords_[3 * i + 2]}; }
  std::span<const std::uint32_t> element(std::size_t e) const {
    const auto npe = static_cast<std::size_t>(nodes_per_element());
    return {connectivity_.data() + e * npe, npe};
  }
  Point3 element_centroid(std::size_t e) const;

  std::size_t node_index(int i, int j, int k = 0) const;

  const std::vector<double>& coordinates() const { return coords_; }
  const std::vector<std::uint32_t>& connectivity() const { return connectivity_; }

  /// Present for shells only: (r, theta, phi) per node.
  const std::optional<std::vector<double>>& curvilinear() const { return curvilinear_; }
  const std::optional<EllipsoidBounds>& ellipsoid() const { return ellipsoid_; }

  std::pair<Point3, Point3> bounding_box() const;
  /// Lebesgue measure of the domain by Gauss quadrature of |det J|.
  double measure() const;

  static StructuredGrid from_arrays(int dim, std::array<int, 3> n_elems, std::vector<double> coords,
                                    std::vector<std::uint32_t> connectivity);

 private:
  friend StructuredGrid build_rect_grid(int, int, double, double);
  friend StructuredGrid build_ellipsoid_grid(int, int, int, const EllipsoidBounds&);

  void build_connectivity();

  int dim_ = 2;
  std::array<int, 3> n_elems_{0, 0, 0};
  std::vector<double> coords_;
  std::vector<std::uint32_t> connectivity_;
  std::optional<std::vector<double>> curvilinear_;
  std::optional<EllipsoidBounds> ellipsoid_;
};

/// Uniform rectangle [0, lx] x [0, ly] with nx x ny quads.
StructuredGrid build_rect_grid(int nx, int ny, double lx, double ly);

/// Hexahedral shell: ni elements along phi, nj along theta, nk along r.
StructuredGrid build_ellipsoid_grid(int ni, int nj, int nk, const EllipsoidBounds& bounds = {});

}  // namespace ecgli::fem
