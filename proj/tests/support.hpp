#pragma once

// Shared test helpers: seeded generators and small brute-force oracles that
// deliberately avoid the library code paths they are used to check.

#include "cardopt/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

using cardopt::IndexSet;
using cardopt::Matrix;
using cardopt::Vector;

inline Matrix gaussian_matrix(std::mt19937_64& rng, int m, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  return A;
}

inline Vector gaussian_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline IndexSet random_support(std::mt19937_64& rng, int n, int k) {
  IndexSet idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// k-sparse vector whose nonzeros are bounded away from zero.
inline Vector sparse_signal(std::mt19937_64& rng, int n, int k) {
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::bernoulli_distribution sign(0.5);
  Vector x = Vector::Zero(n);
  for (int i : random_support(rng, n, k)) x[i] = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  return x;
}

/// Calls f on every k-subset of {0..n-1} in lexicographic order.
inline void for_each_subset(int n, int k, const std::function<void(const IndexSet&)>& f) {
  if (k < 0 || k > n) return;
  IndexSet s(k);
  for (int i = 0; i < k; ++i) s[i] = i;
  while (true) {
    f(s);
    int i = k - 1;
    while (i >= 0 && s[i] == n - k + i) --i;
    if (i < 0) return;
    ++s[i];
    for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
}

/// Rank via Eigen's full-pivot LU, independent of cardopt::matrix_rank.
/// [I, H / sqrt(m)] with a Sylvester Hadamard H (m a power of two): coherence 1/sqrt(m).
inline Matrix identity_hadamard(int m) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Ones(1, 1);
  while (H.rows() < m) {
    const auto r = H.rows();
    Eigen::MatrixXd next(2 * r, 2 * r);
    next << H, H, H, -H;
    H = next;
  }
  Matrix A(m, 2 * m);
  A.leftCols(m) = Matrix::Identity(m, m);
  A.rightCols(m) = H / std::sqrt(static_cast<double>(m));
  return A;
}

inline int rank_of(const Eigen::MatrixXd& M, double tol = 1e-9) {
  if (M.size() == 0) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  lu.setThreshold(tol);
  return static_cast<int>(lu.rank());
}

/// Gaussian matrix with roughly 40% of entries zeroed, resampled until it has full row rank.
inline Matrix sparse_random(std::mt19937_64& rng, int m, int n) {
  std::bernoulli_distribution zero(0.4);
  while (true) {
    Matrix A = gaussian_matrix(rng, m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        if (zero(rng)) A(i, j) = 0.0;
    if (rank_of(A) == m) return A;
  }
}

inline Eigen::MatrixXd columns(const Matrix& A, const IndexSet& s) {
  Eigen::MatrixXd out(A.rows(), static_cast<Eigen::Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) out.col(j) = A.col(s[j]);
  return out;
}

/// Least-squares residual ||A_S x_S - b||^2 via SVD.
inline double restricted_ls_residual(const Matrix& A, const Vector& b, const IndexSet& s) {
  if (s.empty()) return b.squaredNorm();
  const Eigen::MatrixXd As = columns(A, s);
  const Eigen::VectorXd xs = As.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
  return (As * xs - b).squaredNorm();
}

}  // namespace testing_support
