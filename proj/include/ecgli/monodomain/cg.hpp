#pragma once

#include <span>

#include "ecgli/fem/sparse.hpp"

namespace ecgli::monodomain {

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  /// z = P^{-1} r
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class JacobiPreconditioner final : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const fem::CsrMatrix& a);
  void apply(std::span<const double> r, std::span<double> z) const override;

 private:
  Vec inv_diag_;
};

struct CgResult {
  Vec x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for SPD systems. Stops when
/// ||b - A x||_2 <= tol ||b||_2; throws NumericFailure with the final residual
/// if max_iter is exhausted. Uses Jacobi when no preconditioner is given and
/// starts from x0 when provided.
CgResult cg_solve(const fem::CsrMatrix& a, std::span<const double> b, double tol, int max_iter,
                  const Preconditioner* preconditioner = nullptr, std::span<const double> x0 = {});

}  // namespace ecgli::monodomain
