#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecgli/fem/grid.hpp"
#include "ecgli/ionic/ionic_model.hpp"

namespace ecgli::ionic {

/// Per-node ionic parameters, node-major.
class IonicParamField {
 public:
  IonicParamField() = default;
  /// Every node starts from the model baseline.
  IonicParamField(const IonicModel& model, std::size_t n_nodes);

  std::size_t num_nodes() const { return n_nodes_; }
  std::size_t num_params() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  std::span<const double> node(std::size_t i) const { return {values_.data() + i * names_.size(), names_.size()}; }
  std::span<double> node(std::size_t i) { return {values_.data() + i * names_.size(), names_.size()}; }
  const Vec& values() const { return values_; }

  int index_of(const std::string& name) const;
  /// Throws InvalidArgument naming the first node/parameter out of bounds.
  void validate(const IonicModel& model) const;

  bool operator==(const IonicParamField&) const = default;

 private:
  std::vector<std::string> names_;
  std::size_t n_nodes_ = 0;
  Vec values_;
};

/// Disc (2D) or ball (3D) of altered ionic parameters. Each override sets the
/// named parameter to the given value inside the region.
struct IschemiaRegion {
  Point3 center{};
  double radius = 0.0;
  std::vector<std::pair<std::string, double>> overrides;
  /// Width of a linear blend outside the radius; 0 gives sharp membership.
  double smoothing_width = 0.0;
};

/// Default overrides of the shipped model: halved excitability and a 0.1
/// (normalized) elevation of the resting potential.
std::vector<std::pair<std::string, double>> default_ischemia_overrides();

/// Nodes with |x - center| <= radius take the override values; with a
/// smoothing width s > 0, nodes within radius + s blend linearly. Idempotent
/// for s = 0.
IonicParamField apply_ischemia(const IonicParamField& field, const IschemiaRegion& region,
                               const fem::StructuredGrid& grid);

}  // namespace ecgli::ionic
