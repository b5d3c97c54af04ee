#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecgli/common.hpp"

namespace ecgli::fem {

/// Compressed sparse row matrix with sorted column indices per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t n, std::vector<std::uint32_t> row_ptr, std::vector<std::uint32_t> col_idx,
            std::vector<double> values);

  /// Sparsity pattern with explicit zeros, built from (row, col) pairs.
  static CsrMatrix from_pattern(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs);

  std::size_t size() const { return n_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::uint32_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Index into values() of entry (i, j); throws InvalidArgument if absent.
  std::size_t find(std::uint32_t i, std::uint32_t j) const;
  double at(std::uint32_t i, std::uint32_t j) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  Vec multiply(std::span<const double> x) const;
  Vec diagonal() const;
  /// Sum of all entries.
  double total() const;
  /// max |A_ij - A_ji| / max |A_ij|.
  double asymmetry() const;

  /// alpha * this + beta * other; both must share the sparsity pattern.
  CsrMatrix linear_combination(double alpha, const CsrMatrix& other, double beta) const;
  bool same_pattern(const CsrMatrix& other) const;

  bool operator==(const CsrMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint32_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace ecgli::fem
