#include "ecgli/dataset/normalization.hpp"

#include <algorithm>
#include <limits>

namespace ecgli::dataset {

Vec Normalization::normalize_params(std::span<const double> p) const {
  if (p.size() != dim()) throw InvalidArgument("normalize_params: dimension mismatch");
  Vec q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[i] = 2.0 * (p[i] - p_min[i]) / (p_max[i] - p_min[i]) - 1.0;
  return q;
}

Vec Normalization::denormalize_params(std::span<const double> q) const {
  if (q.size() != dim()) throw InvalidArgument("denormalize_params: dimension mismatch");
  Vec p(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) p[i] = p_min[i] + 0.5 * (q[i] + 1.0) * (p_max[i] - p_min[i]);
  return p;
}

Vec Normalization::param_jacobian() const {
  Vec j(dim());
  for (std::size_t i = 0; i < dim(); ++i) j[i] = 2.0 / (p_max[i] - p_min[i]);
  return j;
}

Vec Normalization::normalize_signal(std::span<const double> s) const {
  Vec out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = normalize_signal(s[i]);
  return out;
}

Vec Normalization::denormalize_signal(std::span<const double> s) const {
  Vec out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = denormalize_signal(s[i]);
  return out;
}

Normalization fit_normalization(const std::vector<Vec>& params, const std::vector<const Vec*>& signals) {
  if (params.empty() || signals.empty()) throw InvalidArgument("normalization needs at least one training sample");
  Normalization n;
  const std::size_t d = params.front().size();
  n.p_min.assign(d, std::numeric_limits<double>::infinity());
  n.p_max.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto& p : params) {
    if (p.size() != d) throw InvalidArgument("inconsistent parameter dimensions");
    for (std::size_t i = 0; i < d; ++i) {
      n.p_min[i] = std::min(n.p_min[i], p[i]);
      n.p_max[i] = std::max(n.p_max[i], p[i]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!(n.p_max[i] > n.p_min[i])) {
      throw InvalidArgument("training parameter coordinate " + std::to_string(i) + " is constant");
    }
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Vec* s : signals) {
    for (double v : *s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) throw InvalidArgument("training signals are constant");
  n.signal_offset = 0.5 * (hi + lo);
  n.signal_scale = 0.5 * (hi - lo);
  return n;
}

}  // namespace ecgli::dataset
