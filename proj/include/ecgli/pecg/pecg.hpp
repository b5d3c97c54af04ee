#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ecgli/fem/grid.hpp"
#include "ecgli/fem/tensor.hpp"
#include "ecgli/monodomain/solver.hpp"

namespace ecgli::pecg {

/// Measurement electrodes in an infinite homogeneous bath.
struct LeadSet {
  std::vector<Point3> positions;
  double sigma_b = 1.0;

  std::size_t size() const { return positions.size(); }
  /// Every lead strictly outside the grid's bounding box and sigma_b > 0.
  void validate(const fem::StructuredGrid& grid) const;
};

/// N leads at the centers of N equal segments along the x axis of a
/// rectangle [0, lx] x [0, ly], at (x, lead_y, height).
LeadSet line_leads(int n, double lx, double height, double lead_y = 0.0);

/// N leads on a sphere of the given radius around `center`, distributed by a
/// Fibonacci lattice.
LeadSet sphere_leads(int n, const Point3& center, double radius);

/// Lead potentials over time, lead-major: values[lead * n_t + j].
struct PecgSignal {
  std::size_t n_leads = 0;
  std::size_t n_t = 0;
  double t0 = 0.0;
  double dt = 0.0;
  Vec values;

  double at(std::size_t lead, std::size_t j) const { return values[lead * n_t + j]; }
  double& at(std::size_t lead, std::size_t j) { return values[lead * n_t + j]; }
  std::span<const double> lead(std::size_t i) const { return {values.data() + i * n_t, n_t}; }
  double time(std::size_t j) const { return t0 + dt * static_cast<double>(j); }

  /// No NaN/Inf and n_t >= 2.
  void validate() const;
  bool operator==(const PecgSignal&) const = default;
};

/// Nodal weights z with pECG(x, t) = z . v(t):
///   z_j = -1/(4 pi sigma_b) int D_i grad(phi_j) . grad_y(1/|x - y|) dy
/// by `order`-point Gauss quadrature per axis. 2D meshes are treated as a
/// unit-thickness sheet in the z = 0 plane.
Vec lead_transfer_vector(const fem::StructuredGrid& grid, const fem::ConductivityTensorField& di,
                         const Point3& lead, double sigma_b, int order = 2);

std::vector<Vec> lead_transfer_vectors(const fem::StructuredGrid& grid, const fem::ConductivityTensorField& di,
                                       const LeadSet& leads, int order = 2);

/// values[i][j] = z_i . v(t_j); snapshot times must be uniformly spaced.
PecgSignal compute_pecg(const monodomain::Trajectory& trajectory, const std::vector<Vec>& transfer);

/// Streaming variant: feed snapshots as they are produced.
class PecgRecorder {
 public:
  explicit PecgRecorder(std::vector<Vec> transfer);
  void record(double t, std::span<const double> v);
  /// Throws InvalidArgument when the recorded times are not uniform.
  PecgSignal finish() const;

 private:
  std::vector<Vec> transfer_;
  std::vector<double> times_;
  std::vector<Vec> per_lead_;
};

/// CSV with header t,lead_0,...,lead_{N-1}; one row per time, 17 significant
/// digits so a read reproduces the doubles exactly.
void write_signal_csv(std::ostream& out, const PecgSignal& s);
void write_signal_csv(const std::filesystem::path& path, const PecgSignal& s);
PecgSignal read_signal_csv(std::istream& in);
PecgSignal read_signal_csv(const std::filesystem::path& path);

}  // namespace ecgli::pecg
