#pragma once

// Best fit of b by a fixed set of columns, in any residual norm.

#include "cardopt/core.hpp"
#include "cardopt/lp.hpp"

namespace cardopt {

struct RestrictedFit {
  Vector x;         // full length, zero off the support
  double residual;  // ||Ax - b|| in the requested norm (unsquared)
};

inline RestrictedFit restricted_fit(const Matrix& A, const Vector& b, const IndexSet& cols, ResidualNorm p) {
  if (p == ResidualNorm::L2 || cols.empty()) {
    LeastSquares ls = least_squares(A, b, cols);
    return {ls.x, residual_norm(A, b, ls.x, p)};
  }
  // L1: min sum t  s.t. -t <= A_S x_S - b <= t.  Linf: a single shared t.
  const int m = static_cast<int>(A.rows());
  const int k = static_cast<int>(cols.size());
  const int nt = p == ResidualNorm::L1 ? m : 1;
  LpModel lp(k + nt);
  for (int j = 0; j < k; ++j) {
    lp.lower[j] = -kInf;
    lp.upper[j] = kInf;
  }
  for (int t = 0; t < nt; ++t) lp.objective[k + t] = 1.0;
  for (int i = 0; i < m; ++i) {
    Vector row = Vector::Zero(k + nt);
    for (int j = 0; j < k; ++j) row[j] = A(i, cols[j]);
    const int t = p == ResidualNorm::L1 ? i : 0;
    Vector r1 = row, r2 = row;
    r1[k + t] = -1.0;
    r2[k + t] = 1.0;
    lp.add_row(r1, Relation::LessEq, b[i]);
    lp.add_row(r2, Relation::GreaterEq, b[i]);
  }
  const LpResult r = solve_lp(lp);
  if (r.status != LpStatus::Optimal) throw std::runtime_error("restricted_fit: residual LP failed");
  Vector x = Vector::Zero(A.cols());
  for (int j = 0; j < k; ++j) x[cols[j]] = r.x[j];
  return {x, residual_norm(A, b, x, p)};
}

/// Residual acceptance used by every exact CardMin path.
inline bool within_delta(double residual, double delta, const Vector& b) {
  return residual <= delta + residual_tolerance(b);
}

}  // namespace cardopt
