#pragma once

// Covering inequalities sum_{i in C} y_i >= 1 over complements of infeasible
// supports, their greedy separation, and the branch-and-cut adapter for
// cardinality minimization built on them.

#include "cardopt/bnb.hpp"
#include "cardopt/lp.hpp"
#include "cardopt/models/restricted.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>

namespace cardopt {

/// sum_{i in complement} y_i >= 1
struct CoveringCut {
  IndexSet complement;
};

namespace detail {

/// Incremental independence test by twice-orthogonalized Gram-Schmidt.
class SpanBuilder {
 public:
  explicit SpanBuilder(Eigen::Index dim) : dim_(dim) {}

  bool try_add(const Vector& v) {
    const double scale = v.norm();
    if (scale == 0.0) return false;
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis_) r -= q.dot(r) * q;
    if (r.norm() <= 1e-9 * scale) return false;
    basis_.push_back(r / r.norm());
    return true;
  }

  bool in_span(const Vector& v) const {
    const double scale = v.norm();
    if (scale == 0.0) return true;
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis_) r -= q.dot(r) * q;
    return r.norm() <= 1e-9 * scale;
  }

  int size() const { return static_cast<int>(basis_.size()); }
  bool full() const { return size() == dim_; }

 private:
  Eigen::Index dim_;
  std::vector<Vector> basis_;
};

inline IndexSet order_by_weight_desc(const Vector& y) {
  IndexSet order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return y[a] > y[b]; });
  return order;
}

}  // namespace detail

/// Matroid greedy: a basis B of the columns of A (of (A, -b) forced to contain
/// the appended column when b is given) maximizing sum_{i in B} y_i. Returns the
/// cut over [n] \ B when it is violated by more than 1e-7.
inline std::optional<CoveringCut> separate_covering_cut(const Matrix& A, const std::optional<Vector>& b,
                                                        const Vector& y) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (y.size() != n) throw std::invalid_argument("separate_covering_cut: y length mismatch");
  if (b && b->size() != m) throw std::invalid_argument("separate_covering_cut: b length mismatch");
  if (matrix_rank(A) != m) throw std::invalid_argument("separate_covering_cut: A must have full row rank");

  detail::SpanBuilder span(m);
  if (b) span.try_add(*b);
  std::vector<bool> in_basis(n, false);
  for (int i : detail::order_by_weight_desc(y)) {
    if (span.full()) break;
    if (span.try_add(A.col(i))) in_basis[i] = true;
  }
  CoveringCut cut;
  double lhs = 0.0;
  for (int i = 0; i < n; ++i)
    if (!in_basis[i]) {
      cut.complement.push_back(i);
      lhs += y[i];
    }
  if (lhs < 1.0 - 1e-7) return cut;
  return std::nullopt;
}

/// Feasibility of a support for a CardMin instance, with the fitted point.
inline std::optional<Vector> cardmin_support_point(const ProblemInstance& inst, const IndexSet& S) {
  const auto& cm = std::get<CardMin>(inst.kind);
  if (cm.delta == 0.0) {
    // Exact rank test first: b must lie in the span of A_S.
    const Matrix As = select_columns(inst.A, S);
    Matrix Ab(inst.rows(), static_cast<Eigen::Index>(S.size()) + 1);
    if (!S.empty()) Ab.leftCols(S.size()) = As;
    Ab.col(S.size()) = inst.b;
    if (inst.b.norm() > 0.0 && matrix_rank(Ab) != matrix_rank(As)) return std::nullopt;
  }
  RestrictedFit fit = restricted_fit(inst.A, inst.b, S, cm.residual_norm);
  if (!within_delta(fit.residual, cm.delta, inst.b)) return std::nullopt;
  return fit.x;
}

/// Branch-and-cut on binary y for CardMin: min 1^T y over lazily generated
/// covering inequalities.
class CoveringAdapter {
 public:
  static constexpr bool kIntegralObjective = true;
  static constexpr bool kExactBounds = true;

  struct State {
    std::vector<signed char> fix;
  };
  struct Eval {
    double bound = 0.0;
    bool infeasible = false;
    Vector y;
  };

  explicit CoveringAdapter(const ProblemInstance& inst) : inst_(inst) {
    inst_.validate();
    if (!std::holds_alternative<CardMin>(inst_.kind)) throw std::invalid_argument("covering: CardMin instance required");
    exact_ = std::get<CardMin>(inst_.kind).delta == 0.0;
    if (exact_ && matrix_rank(inst_.A) != inst_.rows())
      throw std::invalid_argument("covering: A must have full row rank");
    IndexSet all(inst_.cols());
    std::iota(all.begin(), all.end(), 0);
    infeasible_ = !cardmin_support_point(inst_, all).has_value();
  }

  const std::vector<IndexSet>& cuts() const { return cuts_; }

  State root() const { return State{std::vector<signed char>(inst_.cols(), -1)}; }

  Eval evaluate(const State& s) const {
    const int n = inst_.cols();
    Eval e;
    if (infeasible_) {
      e.infeasible = true;
      return e;
    }
    // Fixings reduce the cut system to free columns; a cut met by a column
    // fixed at one is dropped, a cut left without free columns is violated.
    std::vector<int> pos(n, -1);
    IndexSet free_cols;
    double fixed_ones = 0.0;
    for (int j = 0; j < n; ++j) {
      if (s.fix[j] < 0) {
        pos[j] = static_cast<int>(free_cols.size());
        free_cols.push_back(j);
      } else {
        fixed_ones += s.fix[j];
      }
    }
    std::vector<IndexSet> active;
    for (const auto& c : cuts_) {
      IndexSet row;
      bool met = false;
      for (int i : c) {
        if (s.fix[i] == 1) met = true;
        else if (pos[i] >= 0) row.push_back(pos[i]);
      }
      if (met) continue;
      if (row.empty()) {
        e.infeasible = true;
        return e;
      }
      active.push_back(std::move(row));
    }
    e.y = Vector::Zero(n);
    for (int j = 0; j < n; ++j)
      if (s.fix[j] == 1) e.y[j] = 1.0;
    e.bound = fixed_ones;
    if (active.empty()) return e;
    const Vector yf = covering_lp(active, static_cast<int>(free_cols.size()));
    for (std::size_t p = 0; p < free_cols.size(); ++p) e.y[free_cols[p]] = yf[p];
    e.bound += yf.sum();
    return e;
  }

  bool separate(const State&, const Eval& e) {
    std::optional<IndexSet> cut;
    if (exact_) {
      if (auto c = separate_covering_cut(inst_.A, inst_.b, e.y)) cut = c->complement;
    }
    if (!cut) cut = greedy_infeasible_cut(e.y);
    if (!cut) return false;
    if (!seen_.insert(*cut).second) return false;
    cuts_.push_back(*cut);
    return true;
  }

  std::vector<State> branch(const State& s, const Eval& e) const {
    const int n = inst_.cols();
    int pick = -1;
    double best = kIntegralityEps;
    for (int j = 0; j < n; ++j) {
      if (s.fix[j] >= 0) continue;
      const double frac = std::min(e.y[j], 1.0 - e.y[j]);
      if (frac > best) {
        best = frac;
        pick = j;
      }
    }
    if (pick < 0) {
      const IndexSet S = support_of(e.y, 0.5);
      if (cardmin_support_point(inst_, S)) return {};
      for (int j = 0; j < n; ++j)
        if (s.fix[j] < 0) {
          pick = j;
          break;
        }
      if (pick < 0) return {};
    }
    State up = s, down = s;
    up.fix[pick] = 1;
    down.fix[pick] = 0;
    return {up, down};
  }

  /// Rounding: add columns by decreasing y until feasible, then drop redundant ones.
  std::optional<Candidate> incumbent(const State&, const Eval& e) const {
    IndexSet chosen;
    std::optional<Vector> point = cardmin_support_point(inst_, chosen);
    if (!point) {
      for (int j : detail::order_by_weight_desc(e.y)) {
        chosen.push_back(j);
        if (exact_ && !grows_span(chosen)) {
          chosen.pop_back();
          continue;
        }
        if ((point = cardmin_support_point(inst_, sorted(chosen)))) break;
      }
    }
    if (!point) return std::nullopt;
    // Drop columns (lowest weight first) while the support stays feasible.
    for (int idx = static_cast<int>(chosen.size()) - 1; idx >= 0; --idx) {
      IndexSet trial = chosen;
      trial.erase(trial.begin() + idx);
      if (auto p = cardmin_support_point(inst_, sorted(trial))) {
        chosen = trial;
        point = p;
      }
    }
    Vector x = *point;
    return Candidate{x, static_cast<double>(cardinality(x))};
  }

 private:
  static constexpr double kIntegralityEps = 1e-6;

  /// min 1^T y s.t. every row covers, y >= 0. The upper bound y <= 1 never
  /// binds at an optimum. Cuts far outnumber columns, so the packing dual
  /// max 1^T u s.t. C^T u <= 1, u >= 0 is solved and y is read off its duals;
  /// the primal is solved directly if that readout fails to check out.
  static Vector covering_lp(const std::vector<IndexSet>& rows, int nf) {
    const int nc = static_cast<int>(rows.size());
    LpModel dual(nc);
    dual.objective.setConstant(-1.0);
    std::vector<Vector> cols(nf, Vector::Zero(nc));
    for (int r = 0; r < nc; ++r)
      for (int j : rows[r]) cols[j][r] = 1.0;
    for (int j = 0; j < nf; ++j) dual.add_row(cols[j], Relation::LessEq, 1.0);
    const LpResult d = solve_lp(dual);
    if (d.status == LpStatus::Optimal) {
      const Vector y = (-d.duals).cwiseMax(0.0).cwiseMin(1.0);
      bool ok = std::abs(y.sum() + d.objective) <= 1e-7 * std::max(1.0, std::abs(d.objective));
      for (int r = 0; ok && r < nc; ++r) {
        double cover = 0.0;
        for (int j : rows[r]) cover += y[j];
        ok = cover >= 1.0 - 1e-7;
      }
      if (ok) return y;
    }
    LpModel primal(nf);
    primal.objective.setOnes();
    primal.upper.setOnes();
    for (const auto& row : rows) {
      Vector c = Vector::Zero(nf);
      for (int j : row) c[j] = 1.0;
      primal.add_row(c, Relation::GreaterEq, 1.0);
    }
    const LpResult p = solve_lp(primal);
    if (p.status != LpStatus::Optimal) throw std::runtime_error("covering: relaxation failed");
    return p.x;
  }

  static IndexSet sorted(IndexSet s) {
    std::sort(s.begin(), s.end());
    return s;
  }

  bool grows_span(const IndexSet& chosen) const {
    const Matrix As = select_columns(inst_.A, chosen);
    return matrix_rank(As) == static_cast<int>(chosen.size());
  }

  /// Maximal infeasible support grown by decreasing y; its complement is a cut.
  std::optional<IndexSet> greedy_infeasible_cut(const Vector& y) const {
    const int n = inst_.cols();
    IndexSet B;
    for (int j : detail::order_by_weight_desc(y)) {
      IndexSet trial = B;
      trial.push_back(j);
      std::sort(trial.begin(), trial.end());
      if (!cardmin_support_point(inst_, trial)) B = trial;
    }
    if (cardmin_support_point(inst_, B)) return std::nullopt;
    std::vector<bool> in(n, false);
    for (int j : B) in[j] = true;
    IndexSet comp;
    double lhs = 0.0;
    for (int j = 0; j < n; ++j)
      if (!in[j]) {
        comp.push_back(j);
        lhs += y[j];
      }
    if (comp.empty() || lhs >= 1.0 - 1e-7) return std::nullopt;
    return comp;
  }

  ProblemInstance inst_;
  bool exact_ = false;
  bool infeasible_ = false;
  std::vector<IndexSet> cuts_;
  std::set<IndexSet> seen_;
};

}  // namespace cardopt
