#include "ecgli/ionic/param_field.hpp"

#include <algorithm>
#include <cmath>

namespace ecgli::ionic {

IonicParamField::IonicParamField(const IonicModel& model, std::size_t n_nodes)
    : names_(model.parameter_names()), n_nodes_(n_nodes) {
  const auto& base = model.baseline_parameters();
  values_.reserve(n_nodes * base.size());
  for (std::size_t i = 0; i < n_nodes; ++i) values_.insert(values_.end(), base.begin(), base.end());
}

int IonicParamField::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

void IonicParamField::validate(const IonicModel& model) const {
  if (names_ != model.parameter_names()) throw InvalidArgument("parameter field does not match the ionic model");
  const auto& lo = model.parameter_lower_bounds();
  const auto& hi = model.parameter_upper_bounds();
  for (std::size_t i = 0; i < n_nodes_; ++i) {
    const auto p = node(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!(p[k] >= lo[k] && p[k] <= hi[k])) {
        throw InvalidArgument("ionic parameter '" + names_[k] + "' at node " + std::to_string(i) +
                              " outside its bounds");
      }
    }
  }
}

std::vector<std::pair<std::string, double>> default_ischemia_overrides() {
  return {{"excitability_scale", 0.5}, {"rest_shift", 0.1}};
}

IonicParamField apply_ischemia(const IonicParamField& field, const IschemiaRegion& region,
                               const fem::StructuredGrid& grid) {
  if (!(region.radius > 0.0)) throw InvalidArgument("ischemia radius must be positive");
  if (!(region.smoothing_width >= 0.0)) throw InvalidArgument("ischemia smoothing width must be >= 0");
  if (field.num_nodes() != grid.num_nodes()) throw InvalidArgument("parameter field does not match the grid");
  const auto [lo, hi] = grid.bounding_box();
  for (int d = 0; d < 3; ++d) {
    if (region.center[d] < lo[d] - 1e-9 || region.center[d] > hi[d] + 1e-9) {
      throw InvalidArgument("ischemia center lies outside the domain bounding box");
    }
  }
  std::vector<std::pair<int, double>> slots;
  for (const auto& [name, value] : region.overrides) {
    const int k = field.index_of(name);
    if (k < 0) throw InvalidArgument("unknown ionic parameter override '" + name + "'");
    slots.emplace_back(k, value);
  }
  IonicParamField out = field;
  const double outer = region.radius + region.smoothing_width;
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    const double d = distance(grid.node(i), region.center);
    if (d > outer) continue;
    double s = 1.0;
    if (d > region.radius) s = (outer - d) / region.smoothing_width;
    auto p = out.node(i);
    for (const auto& [k, value] : slots) p[k] = (s == 1.0) ? value : p[k] + s * (value - p[k]);
  }
  return out;
}

}  // namespace ecgli::ionic
