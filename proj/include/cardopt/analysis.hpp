#pragma once

// Recovery-condition calculators (coherence, spark, cospark, nullspace and
// restricted isometry constants, the strong source condition) and an
// exhaustive solver used as ground truth for the exact methods.

#include "cardopt/bnb.hpp"
#include "cardopt/lp.hpp"
#include "cardopt/models/covering.hpp"
#include "cardopt/models/milp.hpp"
#include "cardopt/models/restricted.hpp"
#include "cardopt/sparsify.hpp"

#include <optional>
#include <variant>

namespace cardopt {

inline double mutual_coherence(const Matrix& A) {
  const Eigen::Index n = A.cols();
  Vector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    norms[j] = A.col(j).norm();
    if (norms[j] == 0.0) throw std::invalid_argument("mutual_coherence: zero column");
  }
  double mu = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      mu = std::max(mu, std::abs(A.col(i).dot(A.col(j))) / (norms[i] * norms[j]));
  return std::min(mu, 1.0);
}

// ---------------------------------------------------------------------------
// Spark

/// Columns are linearly independent: there is no circuit.
struct NoCircuit {
  bool operator==(const NoCircuit&) const = default;
};

using SparkValue = std::variant<int, NoCircuit>;

namespace spark_methods {
struct BruteForce {};
struct CoveringBnb {
  BnbConfig config{};
};
}  // namespace spark_methods

using SparkMethod = std::variant<spark_methods::BruteForce, spark_methods::CoveringBnb>;

namespace detail {

/// Rows of A forming a basis of its row space.
inline Matrix independent_rows(const Matrix& A) {
  SpanBuilder span(A.cols());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    if (span.try_add(A.row(i).transpose())) keep.push_back(i);
  Matrix out(static_cast<Eigen::Index>(keep.size()), A.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = A.row(keep[i]);
  return out;
}

inline bool dependent(const Matrix& A, const IndexSet& S) {
  const double scale = A.size() > 0 ? A.cwiseAbs().maxCoeff() : 0.0;
  return matrix_rank(select_columns(A, S), 1e-10, scale) < static_cast<int>(S.size());
}

inline int spark_brute_force(const Matrix& A, int rank) {
  const int n = static_cast<int>(A.cols());
  for (int s = 1; s <= std::min(n, rank + 1); ++s) {
    bool found = false;
    for_each_combination(n, s, [&](const IndexSet& S) {
      found = dependent(A, S);
      return !found;
    });
    if (found) return s;
  }
  throw std::logic_error("spark: no dependent set below rank + 1");
}

/// min 1^T y  s.t.  Ax = 0, -y + 2z <= x <= y, 1^T z = 1, y, z binary, plus
/// covering cuts 1^T y_{B^c} >= 1 for column bases B separated greedily.
class SparkAdapter {
 public:
  static constexpr bool kIntegralObjective = true;
  static constexpr bool kExactBounds = true;

  struct State {
    std::vector<signed char> fix;  // y then z; -1 free
  };
  struct Eval {
    double bound = 0.0;
    bool infeasible = false;
    Vector w;  // (x, y, z)
    int branch_on = -1;
  };

  explicit SparkAdapter(Matrix A_full_row_rank) : A_(std::move(A_full_row_rank)), n_(static_cast<int>(A_.cols())) {}

  State root() const { return State{std::vector<signed char>(2 * n_, -1)}; }

  Eval evaluate(const State& s) const {
    const int n = n_;
    LpModel lp(3 * n);
    for (int j = 0; j < n; ++j) {
      lp.lower[j] = -1.0;
      lp.upper[j] = 1.0;
      lp.objective[n + j] = 1.0;
    }
    for (int p = 0; p < 2 * n; ++p) {
      lp.upper[n + p] = 1.0;
      if (s.fix[p] >= 0) lp.lower[n + p] = lp.upper[n + p] = s.fix[p];
    }
    for (Eigen::Index i = 0; i < A_.rows(); ++i) {
      Vector row = Vector::Zero(3 * n);
      row.head(n) = A_.row(i).transpose();
      lp.add_row(row, Relation::Equal, 0.0);
    }
    for (int j = 0; j < n; ++j) {
      Vector up = Vector::Zero(3 * n), lo = Vector::Zero(3 * n);
      up[j] = 1.0;
      up[n + j] = -1.0;
      lp.add_row(up, Relation::LessEq, 0.0);
      lo[j] = 1.0;
      lo[n + j] = 1.0;
      lo[2 * n + j] = -2.0;
      lp.add_row(lo, Relation::GreaterEq, 0.0);
    }
    Vector pick = Vector::Zero(3 * n);
    pick.tail(n).setOnes();
    lp.add_row(pick, Relation::Equal, 1.0);
    for (const auto& c : cuts_) {
      Vector row = Vector::Zero(3 * n);
      for (int i : c) row[n + i] = 1.0;
      lp.add_row(row, Relation::GreaterEq, 1.0);
    }

    Eval e;
    const LpResult r = solve_lp(lp);
    if (r.status != LpStatus::Optimal) {
      e.infeasible = true;
      return e;
    }
    e.bound = r.objective;
    e.w = r.x;
    double worst = kIntegralityTol;
    for (int p = 0; p < 2 * n; ++p) {
      const double v = r.x[n + p];
      const double frac = std::min(v, 1.0 - v);
      if (frac > worst) {
        worst = frac;
        e.branch_on = p;
      }
    }
    return e;
  }

  bool separate(const State&, const Eval& e) {
    const auto cut = separate_covering_cut(A_, std::nullopt, e.w.segment(n_, n_));
    if (!cut || !seen_.insert(cut->complement).second) return false;
    cuts_.push_back(cut->complement);
    return true;
  }

  std::vector<State> branch(const State& s, const Eval& e) const {
    if (e.branch_on < 0) return {};
    State up = s, down = s;
    up.fix[e.branch_on] = 1;
    down.fix[e.branch_on] = 0;
    return {up, down};
  }

  std::optional<Candidate> incumbent(const State&, const Eval& e) const {
    if (e.branch_on >= 0) return std::nullopt;
    // z_i = 1 forces x_i = 1, so x is a nonzero nullspace vector.
    const Vector x = e.w.head(n_);
    IndexSet S = support_of(x);
    if (S.empty() || !dependent(A_, S)) S = support_of(e.w.segment(n_, n_), 0.5);
    if (!dependent(A_, S)) return std::nullopt;
    return Candidate{x, static_cast<double>(S.size())};
  }

 private:
  Matrix A_;
  int n_;
  std::vector<IndexSet> cuts_;
  std::set<IndexSet> seen_;
};

}  // namespace detail

/// Smallest number of linearly dependent columns.
inline SparkValue spark(const Matrix& A, const SparkMethod& method = spark_methods::BruteForce{}) {
  const int n = static_cast<int>(A.cols());
  if (n == 0) return NoCircuit{};
  for (int j = 0; j < n; ++j)
    if (detail::dependent(A, {j})) return 1;
  const int rank = matrix_rank(A);
  if (rank == n) return NoCircuit{};
  if (std::holds_alternative<spark_methods::BruteForce>(method)) {
    if (n > 22) throw std::invalid_argument("spark: brute force limited to n <= 22");
    return detail::spark_brute_force(A, rank);
  }
  detail::SparkAdapter adapter(detail::independent_rows(A));
  const SolveReport r = run(adapter, std::get<spark_methods::CoveringBnb>(method).config);
  if (r.status != BnbStatus::Optimal || !r.has_incumbent)
    throw std::runtime_error(std::string("spark: branch and bound ended with ") + to_string(r.status));
  return static_cast<int>(std::lround(r.solution.objective));
}

/// min ||Ax||_0 over x != 0, for A of full column rank, as the spark of a
/// matrix whose nullspace is range(A).
inline int cospark(const Matrix& A) {
  const auto m = A.rows(), n = A.cols();
  if (n == 0) throw std::invalid_argument("cospark: empty matrix");
  if (matrix_rank(A) != n) throw std::invalid_argument("cospark: A must have full column rank");
  if (m == n) return 1;
  const Matrix N = nullspace_basis(Matrix(A.transpose())).transpose();
  const SparkValue s = spark(N, m <= 22 ? SparkMethod{spark_methods::BruteForce{}} : SparkMethod{spark_methods::CoveringBnb{}});
  return std::get<int>(s);
}

// ---------------------------------------------------------------------------
// Nullspace and restricted isometry constants

/// alpha_k = max ||x_S||_1 over Ax = 0, ||x||_1 = 1, |S| <= k. For each support
/// and each sign pattern s on it (first sign fixed by symmetry) an LP maximizes
/// s^T x_S with x = p - q and 1^T (p + q) = 1.
inline double nsc(const Matrix& A, int k) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (k < 0 || k > n) throw std::invalid_argument("nsc: k out of range");
  if (n > 16) throw std::invalid_argument("nsc: limited to n <= 16");
  if (k == 0) return 0.0;
  if (matrix_rank(A) == n) return 0.0;

  LpModel base(2 * n);
  for (int i = 0; i < m; ++i) {
    Vector row(2 * n);
    row.head(n) = A.row(i).transpose();
    row.tail(n) = -A.row(i).transpose();
    base.add_row(row, Relation::Equal, 0.0);
  }
  base.add_row(Vector::Ones(2 * n), Relation::Equal, 1.0);

  double best = 0.0;
  // Larger supports dominate, so only |S| = k is visited.
  for_each_combination(n, k, [&](const IndexSet& S) {
    for (long pattern = 0; pattern < (1L << (k - 1)); ++pattern) {
      LpModel lp = base;
      for (int i = 0; i < k; ++i) {
        const double sign = i > 0 && (pattern >> (i - 1)) & 1 ? -1.0 : 1.0;
        lp.objective[S[i]] = -sign;
        lp.objective[n + S[i]] = sign;
      }
      const LpResult r = solve_lp(lp);
      if (r.status != LpStatus::Optimal) throw std::runtime_error("nsc: LP failed");
      best = std::max(best, -r.objective);
    }
    return best < 1.0 - 1e-12;
  });
  return std::min(best, 1.0);
}

/// delta_k = max over |S| <= k of max(lambda_max - 1, 1 - lambda_min) of A_S^T A_S.
inline double ric(const Matrix& A, int k) {
  const int n = static_cast<int>(A.cols());
  if (k < 0 || k > n) throw std::invalid_argument("ric: k out of range");
  if (n > 16) throw std::invalid_argument("ric: limited to n <= 16");
  if (k == 0) return 0.0;
  double best = 0.0;
  // Eigenvalues of principal submatrices interlace, so |S| = k suffices.
  for_each_combination(n, k, [&](const IndexSet& S) {
    const Matrix As = select_columns(A, S);
    const SymmetricEigen eig = eigh_sym(Matrix(As.transpose() * As));
    const double hi = eig.values.maxCoeff(), lo = eig.values.minCoeff();
    best = std::max({best, hi - 1.0, 1.0 - lo});
    return true;
  });
  return best;
}

// ---------------------------------------------------------------------------
// Strong source condition

struct SourceCondition {
  bool holds = false;
  std::optional<Vector> witness;  // w with (A^T w)_S = sign(xhat_S), |(A^T w)_j| < 1 elsewhere
};

/// Uniqueness certificate for xhat as the basis pursuit solution with b = A xhat.
inline SourceCondition strong_source_condition(const Matrix& A, const Vector& xhat) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (xhat.size() != n) throw std::invalid_argument("strong_source_condition: length mismatch");
  const IndexSet S = support_of(xhat);
  if (S.empty()) return {true, Vector::Zero(m)};
  if (matrix_rank(select_columns(A, S)) != static_cast<int>(S.size())) return {};

  // Variables (w, t): min t  s.t. (A^T w)_S = sign, -t <= (A^T w)_j <= t off S.
  LpModel lp(m + 1);
  for (int i = 0; i < m; ++i) {
    lp.lower[i] = -kInf;
    lp.upper[i] = kInf;
  }
  lp.objective[m] = 1.0;
  std::vector<bool> on(n, false);
  for (int j : S) on[j] = true;
  for (int j = 0; j < n; ++j) {
    Vector row = Vector::Zero(m + 1);
    row.head(m) = A.col(j);
    if (on[j]) {
      lp.add_row(row, Relation::Equal, xhat[j] > 0.0 ? 1.0 : -1.0);
    } else {
      Vector hi = row, lo = row;
      hi[m] = -1.0;
      lo[m] = 1.0;
      lp.add_row(hi, Relation::LessEq, 0.0);
      lp.add_row(lo, Relation::GreaterEq, 0.0);
    }
  }
  const LpResult r = solve_lp(lp);
  if (r.status != LpStatus::Optimal) return {};
  if (!(r.objective < 1.0 - 1e-9)) return {};
  return {true, Vector(r.x.head(m))};
}

// ---------------------------------------------------------------------------
// Recovery report

struct RecoveryConditions {
  bool l0_unique_2k_mu = false;  // 2k < 1 + 1/mu^2
  bool l0l1_equiv_mu = false;    // k < (1 + 1/mu) / 2
  std::optional<bool> nsp_half;  // alpha_k < 1/2
  bool spark_half = false;       // 2k < spark
};

struct RecoveryReport {
  int k = 0;
  double mu = 0.0;
  SparkValue spark = NoCircuit{};
  std::optional<double> nsc;
  std::optional<double> ric;
  RecoveryConditions conditions;
};

/// nsc and ric are computed only when requested (both enumerate supports).
inline RecoveryReport recovery_report(const Matrix& A, int k, bool with_nsc = false, bool with_ric = false) {
  if (k < 0 || k > A.cols()) throw std::invalid_argument("recovery_report: k out of range");
  RecoveryReport r;
  r.k = k;
  r.mu = mutual_coherence(A);
  r.spark = spark(A, A.cols() <= 22 ? SparkMethod{spark_methods::BruteForce{}} : SparkMethod{spark_methods::CoveringBnb{}});
  if (with_nsc) r.nsc = nsc(A, k);
  if (with_ric) r.ric = ric(A, k);
  const double inv = r.mu > 0.0 ? 1.0 / r.mu : kInf;
  r.conditions.l0_unique_2k_mu = 2.0 * k < 1.0 + inv * inv;
  r.conditions.l0l1_equiv_mu = k < 0.5 * (1.0 + inv);
  if (r.nsc) r.conditions.nsp_half = *r.nsc < 0.5;
  if (const int* s = std::get_if<int>(&r.spark)) r.conditions.spark_half = 2 * k < *s;
  else r.conditions.spark_half = true;
  return r;
}

// ---------------------------------------------------------------------------
// Exhaustive ground truth

/// Certified optimum by enumerating supports in increasing cardinality. Each
/// support is fitted by least squares (L2) or an LP (L1, Linf). Bounded
/// instances are not supported.
inline Solution oracle_solve(const ProblemInstance& inst) {
  inst.validate();
  if (inst.bounds) throw std::invalid_argument("oracle_solve: variable bounds are not supported");
  const int n = inst.cols();
  if (n > 20) throw std::invalid_argument("oracle_solve: limited to n <= 20");
  int visited = 0;

  if (const auto* cm = std::get_if<CardMin>(&inst.kind)) {
    for (int s = 0; s <= n; ++s) {
      std::optional<Vector> found;
      for_each_combination(n, s, [&](const IndexSet& S) {
        ++visited;
        const RestrictedFit fit = restricted_fit(inst.A, inst.b, S, cm->residual_norm);
        if (within_delta(fit.residual, cm->delta, inst.b)) found = fit.x;
        return !found;
      });
      if (found) {
        // The fit may zero a coefficient; the support size is the certified value.
        Solution sol = make_solution(inst, *found, SolveStatus::Optimal, visited);
        sol.objective = std::min<double>(sol.objective, s);
        return sol;
      }
    }
    return make_solution(Vector::Zero(n), kInf, SolveStatus::Infeasible, visited);
  }

  const int max_card = std::holds_alternative<CardCons>(inst.kind) ? std::get<CardCons>(inst.kind).k : n;
  double count = 0.0;
  for (int s = 0; s <= max_card; ++s) count += binomial(n, s);
  if (count > 2e6) throw std::invalid_argument("oracle_solve: enumeration budget exceeded");

  Vector best_x = Vector::Zero(n);
  double best = objective_value(inst, best_x);
  for (int s = 1; s <= max_card; ++s) {
    // CardReg: a support of size s costs at least s.
    if (std::holds_alternative<CardReg>(inst.kind) && s >= best) break;
    for_each_combination(n, s, [&](const IndexSet& S) {
      ++visited;
      const LeastSquares ls = least_squares(inst.A, inst.b, S);
      const double res2 = ls.residual * ls.residual;
      const double value = std::holds_alternative<CardCons>(inst.kind) ? res2 : s + res2 / std::get<CardReg>(inst.kind).lambda;
      if (value < best) {
        best = value;
        best_x = ls.x;
      }
      return true;
    });
  }
  Solution sol = make_solution(inst, best_x, SolveStatus::Optimal, visited);
  sol.objective = std::min(sol.objective, best);
  return sol;
}

}  // namespace cardopt
