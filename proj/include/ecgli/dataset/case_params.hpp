#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecgli/common.hpp"

namespace ecgli::dataset {

enum class CaseKind { Stimulus2d, Stimulus3d, Ischemia2d, IschemiaRadius2d };

std::string to_string(CaseKind kind);
/// "stimulus-2d", "stimulus-3d", "ischemia-2d", "ischemia-radius-2d".
CaseKind parse_case_kind(const std::string& name);
int parameter_count(CaseKind kind);
/// Coordinate names: (x, y), (theta, r, phi), (x, y) or (x, y, r).
std::vector<std::string> parameter_names(CaseKind kind);

/// Admissible parameter domain: a box in parameter coordinates.
struct ParamBox {
  Vec lo;
  Vec hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> p, double slack = 0.0) const;
  void validate() const;
  bool operator==(const ParamBox&) const = default;
};

/// One case: kind plus parameter vector in its admissible domain.
struct CaseParams {
  CaseKind kind = CaseKind::Stimulus2d;
  Vec p;
};

/// n i.i.d. uniform samples over the box from a seeded splitmix64 stream.
/// Throws InvalidArgument for n < 1 or an empty box.
std::vector<CaseParams> sample_parameters(CaseKind kind, const ParamBox& box, std::size_t n, std::uint64_t seed);

}  // namespace ecgli::dataset
