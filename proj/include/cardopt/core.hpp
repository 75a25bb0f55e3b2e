#pragma once

// Dense linear-algebra value types, problem records, norms and thresholding
// operators shared by every other cardopt module.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cardopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexSet = std::vector<int>;

inline constexpr double kZeroTol = 1e-9;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Problem records

enum class ResidualNorm { L1, L2, Linf };

/// min ||x||_0  s.t.  ||Ax - b||_p <= delta
struct CardMin {
  ResidualNorm residual_norm = ResidualNorm::L2;
  double delta = 0.0;
};

/// min ||Ax - b||_2^2  s.t.  ||x||_0 <= k
struct CardCons {
  int k = 0;
};

/// min ||x||_0 + ||Ax - b||_2^2 / lambda
struct CardReg {
  double lambda = 1.0;
};

using ProblemKind = std::variant<CardMin, CardCons, CardReg>;

struct VarBounds {
  Vector lower;
  Vector upper;
};

struct ProblemInstance {
  Matrix A;
  Vector b;
  ProblemKind kind = CardMin{};
  std::optional<VarBounds> bounds;

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }

  void validate() const;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, IterLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

struct Solution {
  Vector x;
  double objective = 0.0;
  IndexSet support;
  int cardinality = 0;
  SolveStatus status = SolveStatus::Feasible;
  int iterations = 0;
};

// ---------------------------------------------------------------------------
// Support and norms

inline IndexSet support_of(const Vector& x, double zero_tol = kZeroTol) {
  if (zero_tol < 0.0) throw std::invalid_argument("support_of: negative tolerance");
  IndexSet s;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) > zero_tol) s.push_back(static_cast<int>(i));
  return s;
}

inline int cardinality(const Vector& x, double zero_tol = kZeroTol) {
  return static_cast<int>(support_of(x, zero_tol).size());
}

namespace norms {
struct L0 {
  double tol = kZeroTol;
};
struct L1 {};
struct L2 {};
struct Linf {};
/// Largest-k norm: the k biggest magnitudes, combined in l1 (p = 1) or l2 (p = 2).
struct Largest {
  int k = 1;
  int p = 1;
};
}  // namespace norms

using NormKind = std::variant<norms::L0, norms::L1, norms::L2, norms::Linf, norms::Largest>;

/// Indices of the k largest magnitudes; equal magnitudes resolve to the lowest index.
inline IndexSet top_k_indices(const Vector& x, int k) {
  const int n = static_cast<int>(x.size());
  if (k < 0 || k > n) throw std::invalid_argument("top_k_indices: k out of range");
  IndexSet idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return std::abs(x[a]) > std::abs(x[b]); });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline double norm(const Vector& x, const NormKind& which) {
  return std::visit(
      [&](const auto& w) -> double {
        using W = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<W, norms::L0>) {
          return static_cast<double>(cardinality(x, w.tol));
        } else if constexpr (std::is_same_v<W, norms::L1>) {
          return x.lpNorm<1>();
        } else if constexpr (std::is_same_v<W, norms::L2>) {
          return x.norm();
        } else if constexpr (std::is_same_v<W, norms::Linf>) {
          return x.size() == 0 ? 0.0 : x.lpNorm<Eigen::Infinity>();
        } else {
          if (w.p != 1 && w.p != 2) throw std::invalid_argument("norm: Largest p must be 1 or 2");
          double acc = 0.0;
          for (int i : top_k_indices(x, w.k)) acc += w.p == 1 ? std::abs(x[i]) : x[i] * x[i];
          return w.p == 1 ? acc : std::sqrt(acc);
        }
      },
      which);
}

inline double residual_norm(const Matrix& A, const Vector& b, const Vector& x, ResidualNorm p) {
  const Vector r = A * x - b;
  switch (p) {
    case ResidualNorm::L1: return r.lpNorm<1>();
    case ResidualNorm::L2: return r.norm();
    case ResidualNorm::Linf: return r.size() == 0 ? 0.0 : r.lpNorm<Eigen::Infinity>();
  }
  return r.norm();
}

/// Absolute slack granted to residual-bound feasibility tests.
inline double residual_tolerance(const Vector& b) { return 1e-9 * std::max(1.0, b.norm()); }

// ---------------------------------------------------------------------------
// Thresholding

namespace thresholds {
struct Soft {
  double alpha = 0.0;
};
struct Hard {
  double eps = 0.0;
};
struct TopK {
  int k = 0;
};
}  // namespace thresholds

using ThresholdMode = std::variant<thresholds::Soft, thresholds::Hard, thresholds::TopK>;

inline Vector threshold(const Vector& x, const ThresholdMode& mode) {
  return std::visit(
      [&](const auto& m) -> Vector {
        using M = std::decay_t<decltype(m)>;
        Vector out = Vector::Zero(x.size());
        if constexpr (std::is_same_v<M, thresholds::Soft>) {
          if (m.alpha < 0.0) throw std::invalid_argument("threshold: negative alpha");
          for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double mag = std::abs(x[i]) - m.alpha;
            if (mag > 0.0) out[i] = std::copysign(mag, x[i]);
          }
        } else if constexpr (std::is_same_v<M, thresholds::Hard>) {
          if (m.eps < 0.0) throw std::invalid_argument("threshold: negative eps");
          for (Eigen::Index i = 0; i < x.size(); ++i)
            if (std::abs(x[i]) > m.eps) out[i] = x[i];
        } else {
          for (int i : top_k_indices(x, m.k)) out[i] = x[i];
        }
        return out;
      },
      mode);
}

/// Euclidean projection onto {z : ||z||_1 <= tau} by sorted-magnitude threshold search.
inline Vector project_l1_ball(const Vector& x, double tau) {
  if (tau < 0.0) throw std::invalid_argument("project_l1_ball: negative radius");
  if (x.lpNorm<1>() <= tau) return x;
  if (tau == 0.0) return Vector::Zero(x.size());
  std::vector<double> mags(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) mags[i] = std::abs(x[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumulative += mags[j];
    const double candidate = (cumulative - tau) / static_cast<double>(j + 1);
    if (mags[j] - candidate > 0.0) theta = candidate;
  }
  return threshold(x, thresholds::Soft{theta});
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver (cyclic Jacobi)

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values[i]
};

inline bool is_symmetric(const Matrix& Q, double tol = 1e-10) {
  if (Q.rows() != Q.cols()) return false;
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < Q.rows(); ++i)
    for (Eigen::Index j = i + 1; j < Q.cols(); ++j)
      if (std::abs(Q(i, j) - Q(j, i)) > tol * scale) return false;
  return true;
}

inline SymmetricEigen eigh_sym(const Matrix& Q, double off_tol = 1e-12, int max_sweeps = 100) {
  if (!is_symmetric(Q)) throw std::invalid_argument("eigh_sym: matrix is not symmetric");
  const Eigen::Index n = Q.rows();
  // Column-major working copies: rotations touch columns p and q contiguously.
  Eigen::MatrixXd a = 0.5 * (Q + Q.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double total = std::max(a.norm(), std::numeric_limits<double>::min());
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  // Pivots below `floor` can all be left in place without breaking the
  // stopping test; early sweeps also skip pivots small against the mean.
  const double floor = off_tol * total / static_cast<double>(std::max<Eigen::Index>(n, 1));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double off = off_norm();
    if (off <= off_tol * total) break;
    const double skip = sweep < 3 ? std::max(floor, 0.2 * off / static_cast<double>(n * n)) : floor;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= skip || std::abs(apq) <= std::numeric_limits<double>::min()) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = a(p, p);
        const double aqq = a(q, q);
        double* colp = a.col(p).data();
        double* colq = a.col(q).data();
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = colp[k];
          const double akq = colq[k];
          colp[k] = c * akp - s * akq;
          colq[k] = s * akp + c * akq;
          a(p, k) = colp[k];
          a(q, k) = colq[k];
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        double* vp = v.col(p).data();
        double* vq = v.col(q).data();
        for (Eigen::Index k = 0; k < n; ++k) {
          const double x = vp[k];
          const double y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elimination-based helpers

inline Matrix select_columns(const Matrix& A, const IndexSet& cols) {
  Matrix out(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = A.col(cols[j]);
  return out;
}

/// Visits every k-subset of {0..n-1} in lexicographic order while f returns
/// true. Returns false when f stopped the walk.
template <class F>
bool for_each_combination(int n, int k, F&& f) {
  if (k < 0 || k > n) return true;
  IndexSet s(k);
  std::iota(s.begin(), s.end(), 0);
  while (true) {
    if (!f(static_cast<const IndexSet&>(s))) return false;
    int i = k - 1;
    while (i >= 0 && s[i] == n - k + i) --i;
    if (i < 0) return true;
    ++s[i];
    for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

/// Numerical rank by Gaussian elimination with full pivoting. The tolerance is
/// relative to the largest entry, or to `scale` when that is larger (useful for
/// column subsets of a bigger matrix).
inline int matrix_rank(Matrix M, double rel_tol = 1e-10, double scale_hint = 0.0) {
  const Eigen::Index rows = M.rows();
  const Eigen::Index cols = M.cols();
  if (rows == 0 || cols == 0) return 0;
  const double scale = std::max(scale_hint, M.cwiseAbs().maxCoeff());
  if (scale == 0.0) return 0;
  const double tol = rel_tol * scale * static_cast<double>(std::max(rows, cols));
  int rank = 0;
  for (Eigen::Index step = 0; step < std::min(rows, cols); ++step) {
    Eigen::Index pr = 0, pc = 0;
    const double piv = M.bottomRightCorner(rows - step, cols - step).cwiseAbs().maxCoeff(&pr, &pc);
    if (piv <= tol) break;
    M.row(step).swap(M.row(step + pr));
    M.col(step).swap(M.col(step + pc));
    for (Eigen::Index i = step + 1; i < rows; ++i) {
      const double f = M(i, step) / M(step, step);
      if (f != 0.0) M.row(i).tail(cols - step) -= f * M.row(step).tail(cols - step);
    }
    ++rank;
  }
  return rank;
}

struct LeastSquares {
  Vector x;         // full length, zero outside the chosen columns
  double residual;  // ||Ax - b||_2
};

/// Minimum-norm least squares restricted to the given columns.
inline LeastSquares least_squares(const Matrix& A, const Vector& b, const IndexSet& cols) {
  LeastSquares out{Vector::Zero(A.cols()), 0.0};
  if (!cols.empty()) {
    const Eigen::MatrixXd sub = select_columns(A, cols);
    const Vector xs = sub.completeOrthogonalDecomposition().solve(b);
    for (std::size_t j = 0; j < cols.size(); ++j) out.x[cols[j]] = xs[static_cast<Eigen::Index>(j)];
  }
  out.residual = (A * out.x - b).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Instance helpers

inline void ProblemInstance::validate() const {
  if (A.rows() != b.size()) throw std::invalid_argument("instance: A rows and b length differ");
  if (!A.allFinite() || !b.allFinite()) throw std::invalid_argument("instance: non-finite data");
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, CardMin>) {
          if (k.delta < 0.0) throw std::invalid_argument("instance: delta must be nonnegative");
          if (k.delta > 0.0) {
            const double bn = k.residual_norm == ResidualNorm::L1   ? b.lpNorm<1>()
                              : k.residual_norm == ResidualNorm::L2 ? b.norm()
                                                                    : b.lpNorm<Eigen::Infinity>();
            if (k.delta >= bn) throw std::invalid_argument("instance: delta admits the zero vector");
          }
        } else if constexpr (std::is_same_v<K, CardCons>) {
          if (k.k < 0 || k.k > A.cols()) throw std::invalid_argument("instance: k out of range");
        } else {
          if (!(k.lambda > 0.0)) throw std::invalid_argument("instance: lambda must be positive");
        }
      },
      kind);
  if (bounds) {
    if (bounds->lower.size() != A.cols() || bounds->upper.size() != A.cols())
      throw std::invalid_argument("instance: bound length mismatch");
    for (Eigen::Index i = 0; i < A.cols(); ++i)
      if (bounds->lower[i] > 0.0 || bounds->upper[i] < 0.0)
        throw std::invalid_argument("instance: bounds must bracket zero");
  }
}

/// Objective in the instance's own convention: cardinality for CardMin,
/// squared residual for CardCons, cardinality + squared residual / lambda for CardReg.
inline double objective_value(const ProblemInstance& inst, const Vector& x, double zero_tol = kZeroTol) {
  const double card = static_cast<double>(cardinality(x, zero_tol));
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, CardMin>) {
          return card;
        } else if constexpr (std::is_same_v<K, CardCons>) {
          return (inst.A * x - inst.b).squaredNorm();
        } else {
          return card + (inst.A * x - inst.b).squaredNorm() / k.lambda;
        }
      },
      inst.kind);
}

inline bool is_feasible(const ProblemInstance& inst, const Vector& x, double zero_tol = kZeroTol) {
  return std::visit(
      [&](const auto& k) -> bool {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, CardMin>) {
          return residual_norm(inst.A, inst.b, x, k.residual_norm) <= k.delta + residual_tolerance(inst.b);
        } else if constexpr (std::is_same_v<K, CardCons>) {
          return cardinality(x, zero_tol) <= k.k;
        } else {
          return true;
        }
      },
      inst.kind);
}

inline Solution make_solution(const ProblemInstance& inst, Vector x, SolveStatus status, int iterations = 0) {
  Solution s;
  s.support = support_of(x);
  s.cardinality = static_cast<int>(s.support.size());
  s.objective = objective_value(inst, x);
  s.x = std::move(x);
  s.status = status;
  s.iterations = iterations;
  return s;
}

/// Solution record for plain vectors (no instance kind attached).
inline Solution make_solution(Vector x, double objective, SolveStatus status, int iterations = 0) {
  Solution s;
  s.support = support_of(x);
  s.cardinality = static_cast<int>(s.support.size());
  s.objective = objective;
  s.x = std::move(x);
  s.status = status;
  s.iterations = iterations;
  return s;
}

/// Largest eigenvalue of A^T A by power iteration from a fixed start vector.
inline double power_iteration_norm_sq(const Matrix& A, int iters = 50) {
  if (A.cols() == 0 || A.rows() == 0) return 0.0;
  Vector v = Vector::Ones(A.cols()) / std::sqrt(static_cast<double>(A.cols()));
  // Perturb the start deterministically so it is unlikely to be orthogonal to the top singular vector.
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 1e-3 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector w = A.transpose() * (A * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    est = v.dot(w);
    v = w / nw;
  }
  return std::max(est, (A * v).squaredNorm());
}

}  // namespace cardopt
