#include "ecgli/fem/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace ecgli::fem {

CsrMatrix::CsrMatrix(std::size_t n, std::vector<std::uint32_t> row_ptr, std::vector<std::uint32_t> col_idx,
                     std::vector<double> values)
    : n_(n), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
  if (row_ptr_.size() != n_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size()) {
    throw InvalidArgument("inconsistent CSR arrays");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw InvalidArgument("CSR row pointers must be non-decreasing");
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] >= n_) throw InvalidArgument("CSR column index out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) throw InvalidArgument("CSR columns must be sorted");
    }
  }
}

CsrMatrix CsrMatrix::from_pattern(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<std::uint32_t> row_ptr(n + 1, 0), cols;
  cols.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i >= n || j >= n) throw InvalidArgument("pattern entry out of range");
    ++row_ptr[i + 1];
    cols.push_back(j);
  }
  for (std::size_t i = 0; i < n; ++i) row_ptr[i + 1] += row_ptr[i];
  std::vector<double> values(cols.size(), 0.0);
  return CsrMatrix(n, std::move(row_ptr), std::move(cols), std::move(values));
}

std::size_t CsrMatrix::find(std::uint32_t i, std::uint32_t j) const {
  if (i >= n_) throw InvalidArgument("row index out of range");
  const auto begin = col_idx_.begin() + row_ptr_[i];
  const auto end = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) throw InvalidArgument("entry not in sparsity pattern");
  return static_cast<std::size_t>(it - col_idx_.begin());
}

double CsrMatrix::at(std::uint32_t i, std::uint32_t j) const {
  if (i >= n_) throw InvalidArgument("row index out of range");
  const auto begin = col_idx_.begin() + row_ptr_[i];
  const auto end = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  return (it == end || *it != j) ? 0.0 : values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) throw InvalidArgument("CSR multiply: dimension mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[i] = s;
  }
}

Vec CsrMatrix::multiply(std::span<const double> x) const {
  Vec y(n_);
  multiply(x, y);
  return y;
}

Vec CsrMatrix::diagonal() const {
  Vec d(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i));
  return d;
}

double CsrMatrix::total() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

double CsrMatrix::asymmetry() const {
  double scale = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      scale = std::max(scale, std::abs(values_[k]));
      worst = std::max(worst, std::abs(values_[k] - at(col_idx_[k], static_cast<std::uint32_t>(i))));
    }
  }
  return scale == 0.0 ? 0.0 : worst / scale;
}

bool CsrMatrix::same_pattern(const CsrMatrix& other) const {
  return n_ == other.n_ && row_ptr_ == other.row_ptr_ && col_idx_ == other.col_idx_;
}

CsrMatrix CsrMatrix::linear_combination(double alpha, const CsrMatrix& other, double beta) const {
  if (!same_pattern(other)) throw InvalidArgument("linear_combination requires identical sparsity patterns");
  std::vector<double> v(values_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = alpha * values_[k] + beta * other.values_[k];
  return CsrMatrix(n_, row_ptr_, col_idx_, std::move(v));
}

}  // namespace ecgli::fem
