#include "ecgli/monodomain/cg.hpp"

#include <cmath>
#include <optional>

namespace ecgli::monodomain {

JacobiPreconditioner::JacobiPreconditioner(const fem::CsrMatrix& a) : inv_diag_(a.diagonal()) {
  for (double& d : inv_diag_) {
    if (!(d > 0.0)) throw NumericFailure("Jacobi preconditioner: non-positive diagonal entry");
    d = 1.0 / d;
  }
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CgResult cg_solve(const fem::CsrMatrix& a, std::span<const double> b, double tol, int max_iter,
                  const Preconditioner* preconditioner, std::span<const double> x0) {
  const std::size_t n = a.size();
  if (b.size() != n) throw InvalidArgument("cg_solve: right-hand side has the wrong length");
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("cg_solve: tolerance must lie in (0, 1)");
  if (max_iter < 1) throw InvalidArgument("cg_solve: max_iter must be >= 1");
  std::optional<JacobiPreconditioner> jacobi;
  if (preconditioner == nullptr) {
    jacobi.emplace(a);
    preconditioner = &*jacobi;
  }

  CgResult res;
  res.x = x0.empty() ? Vec(n, 0.0) : Vec(x0.begin(), x0.end());
  if (res.x.size() != n) throw InvalidArgument("cg_solve: initial guess has the wrong length");
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    res.x.assign(n, 0.0);
    return res;
  }

  Vec r(n), z(n), p(n), ap(n);
  a.multiply(res.x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  double rnorm = std::sqrt(dot(r, r));
  if (rnorm <= tol * bnorm) {
    res.relative_residual = rnorm / bnorm;
    return res;
  }
  preconditioner->apply(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) throw NumericFailure("cg_solve: matrix is not positive definite");
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    rnorm = std::sqrt(dot(r, r));
    res.iterations = it;
    if (!std::isfinite(rnorm)) throw NumericFailure("cg_solve: residual became non-finite");
    if (rnorm <= tol * bnorm) {
      res.relative_residual = rnorm / bnorm;
      return res;
    }
    preconditioner->apply(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw NumericFailure("cg_solve: no convergence in " + std::to_string(max_iter) +
                       " iterations, relative residual " + std::to_string(rnorm / bnorm));
}

}  // namespace ecgli::monodomain
