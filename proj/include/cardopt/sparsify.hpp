#pragma once

// Nullspace bases and greedy row-by-row sparsification of a full-row-rank
// matrix: find invertible V minimizing the nonzeros of VA.

#include "cardopt/core.hpp"

#include <Eigen/SVD>

#include <optional>

namespace cardopt {

namespace detail {

/// Orthonormal basis of {v : Mv = 0}; the rank comes from Gaussian elimination.
inline Matrix kernel_basis(const Matrix& M) {
  const Eigen::Index cols = M.cols();
  if (M.rows() == 0) return Matrix::Identity(cols, cols);
  const int r = matrix_rank(M);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(M), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(cols - r);
}

inline int count_nonzeros(const Matrix& M, double tol = kZeroTol) {
  return static_cast<int>((M.array().abs() > tol).count());
}

}  // namespace detail

/// B (n x (n - m)) with AB = 0 and rank n - m, for A of full row rank m < n.
inline Matrix nullspace_basis(const Matrix& A) {
  const auto m = A.rows(), n = A.cols();
  if (m >= n) throw std::invalid_argument("nullspace_basis: need more columns than rows");
  if (matrix_rank(A) != m) throw std::invalid_argument("nullspace_basis: A must have full row rank");
  Matrix B = detail::kernel_basis(A);
  if ((A * B).norm() > 1e-9 * std::max(1.0, A.norm()))
    throw std::runtime_error("nullspace_basis: residual too large");
  return B;
}

struct SparsifyResult {
  Matrix V;
  int nnz_before = 0;
  int nnz_after = 0;
  std::vector<IndexSet> per_row_supports;  // support of row i of VA
};

/// Builds V one row at a time. Step i picks the largest zero pattern Z (ties:
/// lexicographically first) such that {v : v^T A_Z = 0} holds a vector outside
/// the span of the rows chosen so far. Exhaustive, so m <= 5 and n <= 12.
inline SparsifyResult greedy_sparsify(const Matrix& A) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (m < 1 || m > 5 || n > 12) throw std::invalid_argument("greedy_sparsify: supports m <= 5, n <= 12");
  if (matrix_rank(A) != m) throw std::invalid_argument("greedy_sparsify: A must have full row rank");

  SparsifyResult out;
  out.V = Matrix::Zero(m, m);
  out.nnz_before = detail::count_nonzeros(A);
  for (int row = 0; row < m; ++row) {
    const Matrix current = out.V.topRows(row);
    std::optional<Vector> pick;
    for (int z = n; z >= 0 && !pick; --z) {
      for_each_combination(n, z, [&](const IndexSet& Z) {
        const Matrix N = detail::kernel_basis(Matrix(select_columns(A, Z).transpose()));
        for (Eigen::Index c = 0; c < N.cols(); ++c) {
          Matrix stacked(row + 1, m);
          stacked.topRows(row) = current;
          stacked.row(row) = N.col(c).transpose();
          if (matrix_rank(stacked) == row + 1) {
            pick = N.col(c);
            return false;
          }
        }
        return true;
      });
    }
    if (!pick) throw std::runtime_error("greedy_sparsify: no independent row found");
    // Scale so the largest entry of the new row of VA is one.
    Vector w = A.transpose() * *pick;
    const double scale = w.cwiseAbs().maxCoeff();
    out.V.row(row) = (*pick / scale).transpose();
    out.per_row_supports.push_back(support_of(w / scale));
  }
  out.nnz_after = detail::count_nonzeros(out.V * A);
  return out;
}

}  // namespace cardopt
