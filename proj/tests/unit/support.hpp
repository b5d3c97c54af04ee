#pragma once

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>

#include "ecgli/common.hpp"
#include "ecgli/rng.hpp"

namespace test {

using ecgli::Vec;

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double rel_err(double a, double b, double floor = 1e-7) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Vec random_vec(ecgli::SplitMix64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ecgli_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace test
