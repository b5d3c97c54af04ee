#include "ecgli/dataset/case_params.hpp"

#include "ecgli/rng.hpp"

namespace ecgli::dataset {

std::string to_string(CaseKind kind) {
  switch (kind) {
    case CaseKind::Stimulus2d:
      return "stimulus-2d";
    case CaseKind::Stimulus3d:
      return "stimulus-3d";
    case CaseKind::Ischemia2d:
      return "ischemia-2d";
    case CaseKind::IschemiaRadius2d:
      return "ischemia-radius-2d";
  }
  return "?";
}

CaseKind parse_case_kind(const std::string& name) {
  for (auto k : {CaseKind::Stimulus2d, CaseKind::Stimulus3d, CaseKind::Ischemia2d, CaseKind::IschemiaRadius2d}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown case kind '" + name + "'");
}

int parameter_count(CaseKind kind) {
  return (kind == CaseKind::Stimulus3d || kind == CaseKind::IschemiaRadius2d) ? 3 : 2;
}

std::vector<std::string> parameter_names(CaseKind kind) {
  switch (kind) {
    case CaseKind::Stimulus3d:
      return {"theta", "r", "phi"};
    case CaseKind::IschemiaRadius2d:
      return {"x", "y", "r"};
    default:
      return {"x", "y"};
  }
}

bool ParamBox::contains(std::span<const double> p, double slack) const {
  if (p.size() != lo.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= lo[i] - slack && p[i] <= hi[i] + slack)) return false;
  }
  return true;
}

void ParamBox::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw InvalidArgument("parameter box bounds malformed");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(hi[i] >= lo[i])) throw InvalidArgument("admissible parameter region is empty");
  }
}

std::vector<CaseParams> sample_parameters(CaseKind kind, const ParamBox& box, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_parameters: n must be >= 1");
  box.validate();
  if (static_cast<int>(box.dim()) != parameter_count(kind)) {
    throw InvalidArgument("parameter box dimension does not match the case kind");
  }
  SplitMix64 rng(seed);
  std::vector<CaseParams> out(n);
  for (auto& c : out) {
    c.kind = kind;
    c.p.resize(box.dim());
    for (std::size_t d = 0; d < box.dim(); ++d) c.p[d] = rng.uniform(box.lo[d], box.hi[d]);
  }
  return out;
}

}  // namespace ecgli::dataset
