#pragma once

// Cardinality-constrained long-short mean-variance portfolios.
//
// Positions split into x = x+ - x-. Each asset is Long, Short or Neutral; the
// tree branches on that choice. With the side selectors relaxed, the node
// polytope projects exactly onto
//   x+_j / u+_j + x-_j / u-_j <= 1                      (undecided j)
//   sum_undecided (x+_j / u+_j + x-_j / u-_j) <= k - #(decided non-neutral)
// since thresholds only bound the selectors from above. Node bounds come from
// Frank-Wolfe with an LP oracle: f(w) - gap(w) never exceeds the node optimum.

#include "cardopt/bnb.hpp"
#include "cardopt/lp.hpp"

#include <Eigen/QR>

#include <chrono>
#include <optional>

namespace cardopt {

struct Exposure {
  double long_min = 0.0;
  double long_max = kInf;
  double short_min = 0.0;
  double short_max = kInf;
};

/// Optional caps on total buying and selling relative to x0.
struct TradeLimits {
  double max_buy = kInf;
  double max_sell = kInf;
};

struct PortfolioInstance {
  Matrix Q;
  Vector mu;
  double lambda = 1.0;
  int k = 0;
  Vector theta_plus, theta_minus;
  Vector u_plus, u_minus;
  Exposure exposure;
  Vector x0;  // empty means all-neutral start
  std::optional<int> H;
  std::optional<TradeLimits> trade;

  int n() const { return static_cast<int>(mu.size()); }

  /// Shape and sign checks; the PSD test needs a spectrum and lives in solve_portfolio.
  void validate() const {
    const int n = this->n();
    if (Q.rows() != n || Q.cols() != n) throw std::invalid_argument("portfolio: Q must be n x n");
    if (!is_symmetric(Q, 1e-8)) throw std::invalid_argument("portfolio: Q is not symmetric");
    if (!(lambda > 0.0)) throw std::invalid_argument("portfolio: lambda must be positive");
    if (k < 0 || k > n) throw std::invalid_argument("portfolio: k out of range");
    for (const Vector* v : {&theta_plus, &theta_minus, &u_plus, &u_minus})
      if (v->size() != n) throw std::invalid_argument("portfolio: per-asset vector length mismatch");
    for (int j = 0; j < n; ++j) {
      if (theta_plus[j] < 0.0 || theta_minus[j] < 0.0) throw std::invalid_argument("portfolio: negative threshold");
      if (theta_plus[j] > u_plus[j] || theta_minus[j] > u_minus[j])
        throw std::invalid_argument("portfolio: threshold exceeds position cap");
    }
    const auto& e = exposure;
    if (e.long_min < 0.0 || e.long_min > e.long_max || e.short_min < 0.0 || e.short_min > e.short_max)
      throw std::invalid_argument("portfolio: exposure limits must satisfy 0 <= L <= U");
    if (x0.size() != 0 && x0.size() != n) throw std::invalid_argument("portfolio: x0 length mismatch");
    if (H && (*H < 0 || *H > n)) throw std::invalid_argument("portfolio: H out of range");
    if (trade && (trade->max_buy < 0.0 || trade->max_sell < 0.0))
      throw std::invalid_argument("portfolio: negative trade limit");
  }
};

struct ReducedRank {
  Vector omegas;  // top-H eigenvalues, descending
  Matrix VH;      // H x n, rows are eigenvectors
  Vector rho;     // residual diagonal
};

inline ReducedRank reduced_rank_from(const Matrix& Q, const SymmetricEigen& eig, int H) {
  const int n = static_cast<int>(Q.rows());
  if (H < 0 || H > n) throw std::invalid_argument("reduced_rank: H out of range");
  ReducedRank rr;
  rr.omegas = eig.values.head(H);
  rr.VH = eig.vectors.leftCols(H).transpose();
  rr.rho.resize(n);
  for (int j = 0; j < n; ++j) {
    double s = Q(j, j);
    for (int i = 0; i < H; ++i) s -= rr.omegas[i] * rr.VH(i, j) * rr.VH(i, j);
    rr.rho[j] = std::abs(s) <= 1e-10 ? 0.0 : s;
  }
  return rr;
}

inline ReducedRank reduced_rank(const Matrix& Q, int H) {
  if (!is_symmetric(Q)) throw std::invalid_argument("reduced_rank: Q is not symmetric");
  return reduced_rank_from(Q, eigh_sym(Q), H);
}

namespace detail {

enum class Side : signed char { Undecided = 0, Long = 1, Short = 2, Neutral = 3 };

/// f(x) = lambda x^T Qe x - mu^T x, where Qe is Q or F^T F + Diag(d).
class PortfolioObjective {
 public:
  PortfolioObjective(const PortfolioInstance& p, const std::optional<ReducedRank>& rr)
      : lambda_(p.lambda), mu_(p.mu) {
    if (rr) {
      factored_ = true;
      F_ = rr->VH;
      for (Eigen::Index i = 0; i < F_.rows(); ++i) F_.row(i) *= std::sqrt(std::max(rr->omegas[i], 0.0));
      d_ = rr->rho.cwiseMax(0.0);
    } else {
      Q_ = p.Q;
    }
  }

  Vector apply(const Vector& x) const {
    if (!factored_) return Q_ * x;
    return F_.transpose() * (F_ * x) + d_.cwiseProduct(x);
  }
  double quad(const Vector& x) const { return x.dot(apply(x)); }
  double value(const Vector& x) const { return lambda_ * quad(x) - mu_.dot(x); }
  Vector gradient(const Vector& x) const { return 2.0 * lambda_ * apply(x) - mu_; }
  double lambda() const { return lambda_; }
  Matrix dense() const {
    if (!factored_) return Q_;
    Matrix M = F_.transpose() * F_;
    M.diagonal() += d_;
    return M;
  }

 private:
  double lambda_;
  Vector mu_;
  bool factored_ = false;
  Matrix Q_, F_;
  Vector d_;
};

struct FwOutcome {
  bool infeasible = false;
  Vector w;
  double value = kInf;
  double lower = -kInf;
  double gap = kInf;
  int iterations = 0;
};

}  // namespace detail

struct PortfolioOptions {
  double leaf_gap = 1e-7;
  double node_gap = 1e-4;
  int max_fw_iterations = 5000;
  int lp_refactor_every = 50;
};

/// Branch-and-bound adapter for the long-short model.
class PortfolioAdapter {
 public:
  using Side = detail::Side;
  static constexpr bool kExactBounds = false;

  struct State {
    std::vector<Side> side;
    int decided_active = 0;
  };
  struct Eval {
    double bound = -kInf;
    bool infeasible = false;
    bool leaf = false;
    Vector w;
    double value = kInf;
  };

  PortfolioAdapter(const PortfolioInstance& p, const std::optional<ReducedRank>& rr, PortfolioOptions opt = {})
      : p_(p), f_(p, rr), opt_(opt) {
    n_ = p_.n();
    nw_ = p_.trade ? 4 * n_ : 2 * n_;
    if (p_.x0.size() == 0) p_.x0 = Vector::Zero(n_);
  }

  void set_deadline(Clock::time_point d) { deadline_ = d; }

  int n() const { return n_; }

  State root() const { return State{std::vector<Side>(n_, Side::Undecided), 0}; }

  Vector positions(const Vector& w) const { return w.head(n_) - w.segment(n_, n_); }

  double objective(const Vector& x) const { return f_.value(x); }

  /// LP description of the relaxed node polytope in w = (x+, x-, [d+, d-]).
  LpModel node_lp(const State& s) const {
    LpModel lp(nw_);
    const int budget = p_.k - s.decided_active;
    Vector card = Vector::Zero(nw_);
    bool any_undecided = false;
    for (int j = 0; j < n_; ++j) {
      const int xp = j, xm = n_ + j;
      const double up = p_.u_plus[j], um = p_.u_minus[j];
      switch (s.side[j]) {
        case Side::Long:
          lp.lower[xp] = p_.theta_plus[j];
          lp.upper[xp] = up;
          lp.upper[xm] = 0.0;
          break;
        case Side::Short:
          lp.upper[xp] = 0.0;
          lp.lower[xm] = p_.theta_minus[j];
          lp.upper[xm] = um;
          break;
        case Side::Neutral:
          lp.upper[xp] = 0.0;
          lp.upper[xm] = 0.0;
          break;
        case Side::Undecided: {
          lp.upper[xp] = up;
          lp.upper[xm] = um;
          if (up > 0.0) card[xp] = 1.0 / up;
          if (um > 0.0) card[xm] = 1.0 / um;
          if (up > 0.0 && um > 0.0) {
            Vector row = Vector::Zero(nw_);
            row[xp] = 1.0 / up;
            row[xm] = 1.0 / um;
            lp.add_row(row, Relation::LessEq, 1.0);
          }
          any_undecided = true;
          break;
        }
      }
    }
    if (any_undecided) lp.add_row(card, Relation::LessEq, static_cast<double>(budget));

    const auto& e = p_.exposure;
    Vector lsum = Vector::Zero(nw_), ssum = Vector::Zero(nw_);
    lsum.head(n_).setOnes();
    ssum.segment(n_, n_).setOnes();
    if (e.long_min > 0.0) lp.add_row(lsum, Relation::GreaterEq, e.long_min);
    if (std::isfinite(e.long_max)) lp.add_row(lsum, Relation::LessEq, e.long_max);
    if (e.short_min > 0.0) lp.add_row(ssum, Relation::GreaterEq, e.short_min);
    if (std::isfinite(e.short_max)) lp.add_row(ssum, Relation::LessEq, e.short_max);

    if (p_.trade) {
      // x+ - x- - d+ + d- = x0
      for (int j = 0; j < n_; ++j) {
        Vector row = Vector::Zero(nw_);
        row[j] = 1.0;
        row[n_ + j] = -1.0;
        row[2 * n_ + j] = -1.0;
        row[3 * n_ + j] = 1.0;
        lp.add_row(row, Relation::Equal, p_.x0[j]);
      }
      Vector buy = Vector::Zero(nw_), sell = Vector::Zero(nw_);
      buy.segment(2 * n_, n_).setOnes();
      sell.segment(3 * n_, n_).setOnes();
      if (std::isfinite(p_.trade->max_buy)) lp.add_row(buy, Relation::LessEq, p_.trade->max_buy);
      if (std::isfinite(p_.trade->max_sell)) lp.add_row(sell, Relation::LessEq, p_.trade->max_sell);
    }
    return lp;
  }

  /// Frank-Wolfe over the node polytope, followed by an active-face polish.
  detail::FwOutcome frank_wolfe(const LpModel& base, double gap_tol, Clock::time_point stop,
                                std::optional<Vector> start = std::nullopt) const {
    detail::FwOutcome out;
    LpOptions lpo;
    lpo.refactor_every = opt_.lp_refactor_every;
    LpModel lp = base;

    auto lmo = [&](const Vector& grad_w, Vector& vertex) {
      lp.objective = grad_w;
      const LpResult r = solve_lp(lp, lpo);
      if (r.status != LpStatus::Optimal) return false;
      vertex = r.x;
      return true;
    };
    auto grad_w = [&](const Vector& w) {
      const Vector gx = f_.gradient(positions(w));
      Vector g = Vector::Zero(nw_);
      g.head(n_) = gx;
      g.segment(n_, n_) = -gx;
      return g;
    };

    Vector w;
    if (start && feasible(base, *start)) {
      w = *start;
    } else if (!lmo(grad_w(Vector::Zero(nw_)), w)) {
      out.infeasible = true;
      return out;
    }

    auto certify = [&](const Vector& point, double& gap_out) {
      Vector s;
      const Vector g = grad_w(point);
      if (!lmo(g, s)) return false;
      gap_out = std::max(0.0, g.dot(point - s));
      return true;
    };

    double fw = f_.value(positions(w));
    int it = 0;
    for (; it < opt_.max_fw_iterations; ++it) {
      const Vector g = grad_w(w);
      Vector s;
      if (!lmo(g, s)) throw std::runtime_error("portfolio: oracle failed on a feasible node");
      const double gap = std::max(0.0, g.dot(w - s));
      out.lower = std::max(out.lower, fw - gap);
      out.gap = gap;
      if (gap <= gap_tol * std::max(1.0, std::abs(fw))) break;
      if (Clock::now() >= stop) break;
      const Vector d = s - w;
      const Vector dx = positions(d);
      const double curv = f_.lambda() * f_.quad(dx);
      const double slope = g.dot(d);
      double step = curv > 0.0 ? std::min(1.0, -slope / (2.0 * curv)) : 1.0;
      step = std::max(step, 0.0);
      w += step * d;
      fw = f_.value(positions(w));
    }
    out.iterations = it;

    // Polish on the detected active face; keep it only when feasible and no worse.
    if (out.gap > 0.0 && Clock::now() < stop) {
      if (auto polished = polish(base, w)) {
        const double fp = f_.value(positions(*polished));
        if (fp <= fw + 1e-12 * std::max(1.0, std::abs(fw))) {
          double gap = kInf;
          if (certify(*polished, gap)) {
            w = *polished;
            fw = fp;
            out.gap = gap;
            out.lower = std::max(out.lower, fw - gap);
          }
        }
      }
    }
    out.w = w;
    out.value = fw;
    out.lower = std::min(out.lower, fw);
    return out;
  }

  Eval evaluate(const State& s) const {
    Eval e;
    if (s.decided_active > p_.k) {
      e.infeasible = true;
      return e;
    }
    const bool leaf = is_leaf(s);
    const LpModel lp = node_lp(s);
    const auto stop = sub_deadline(0.5);
    auto fw = frank_wolfe(lp, leaf ? opt_.leaf_gap : opt_.node_gap, stop);
    if (fw.infeasible) {
      e.infeasible = true;
      return e;
    }
    e.leaf = leaf;
    if (!leaf && mixed_feasible(s, fw.w)) {
      // The relaxed point already satisfies the side logic: solve it out.
      fw = frank_wolfe(lp, opt_.leaf_gap, stop, fw.w);
      if (mixed_feasible(s, fw.w)) e.leaf = true;
    }
    e.bound = fw.lower;
    e.w = fw.w;
    e.value = fw.value;
    return e;
  }

  std::vector<State> branch(const State& s, const Eval& e) const {
    if (e.leaf) return {};
    const Vector x = positions(e.w);
    int pick = -1;
    double best = -1.0;
    for (int j = 0; j < n_; ++j) {
      if (s.side[j] != Side::Undecided) continue;
      if (std::abs(x[j]) > best) {
        best = std::abs(x[j]);
        pick = j;
      }
    }
    if (pick < 0) return {};
    std::vector<State> kids;
    auto child = [&](Side side) {
      State c = s;
      c.side[pick] = side;
      if (side != Side::Neutral) ++c.decided_active;
      kids.push_back(std::move(c));
    };
    const bool long_first = x[pick] >= 0.0;
    if (long_first) {
      if (p_.u_plus[pick] > 0.0) child(Side::Long);
      if (p_.u_minus[pick] > 0.0) child(Side::Short);
    } else {
      if (p_.u_minus[pick] > 0.0) child(Side::Short);
      if (p_.u_plus[pick] > 0.0) child(Side::Long);
    }
    child(Side::Neutral);
    return kids;
  }

  std::optional<Candidate> incumbent(const State& s, const Eval& e) const {
    std::optional<Candidate> best;
    auto offer = [&](const Vector& w) {
      const Vector x = positions(w);
      const double v = f_.value(x);
      if (!best || v < best->objective) best = Candidate{x, v};
    };
    if (e.leaf || mixed_feasible(s, e.w)) offer(e.w);

    // Rounding: the largest relaxed positions take their sides, the rest go neutral.
    const Vector x = positions(e.w);
    State r = s;
    IndexSet order;
    for (int j = 0; j < n_; ++j)
      if (s.side[j] == Side::Undecided) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(x[a]) > std::abs(x[b]); });
    int budget = p_.k - s.decided_active;
    for (int j : order) {
      if (budget > 0 && std::abs(x[j]) > 1e-9) {
        r.side[j] = x[j] > 0.0 ? Side::Long : Side::Short;
        --budget;
        ++r.decided_active;
      } else {
        r.side[j] = Side::Neutral;
      }
    }
    if (r.side != s.side) {
      auto fw = frank_wolfe(node_lp(r), opt_.leaf_gap, sub_deadline(0.8), e.w);
      if (!fw.infeasible) offer(fw.w);
    }
    return best;
  }

 private:
  bool is_leaf(const State& s) const {
    if (s.decided_active >= p_.k) return true;
    for (auto v : s.side)
      if (v == Side::Undecided) return false;
    return true;
  }

  /// True when w satisfies the original side, threshold and cardinality logic.
  bool mixed_feasible(const State& s, const Vector& w) const {
    int active = 0;
    for (int j = 0; j < n_; ++j) {
      const double xp = w[j], xm = w[n_ + j];
      const bool lp = xp > 1e-9, sm = xm > 1e-9;
      if (lp && sm) return false;
      if (s.side[j] == Side::Undecided) {
        if (lp && xp < p_.theta_plus[j] - 1e-9) return false;
        if (sm && xm < p_.theta_minus[j] - 1e-9) return false;
        active += (lp || sm) ? 1 : 0;
      } else if (s.side[j] != Side::Neutral) {
        ++active;
      }
    }
    return active <= p_.k;
  }

  bool feasible(const LpModel& lp, const Vector& w, double tol = 1e-9) const {
    for (int j = 0; j < nw_; ++j)
      if (w[j] < lp.lower[j] - tol || w[j] > lp.upper[j] + tol) return false;
    for (const auto& r : lp.rows) {
      const double v = r.coeffs.dot(w);
      const double scale = tol * std::max(1.0, std::abs(r.rhs));
      if (r.relation == Relation::LessEq && v > r.rhs + scale) return false;
      if (r.relation == Relation::GreaterEq && v < r.rhs - scale) return false;
      if (r.relation == Relation::Equal && std::abs(v - r.rhs) > scale) return false;
    }
    return true;
  }

  /// Minimize f on candidate faces of the node polytope near w. Faces are
  /// nested: the r constraints with the smallest normalized slack are active.
  std::optional<Vector> polish(const LpModel& lp, const Vector& w) const {
    struct Near {
      double slack;
      int kind;  // 0 lower bound, 1 upper bound, 2 row
      int index;
    };
    std::vector<Near> near;
    for (int j = 0; j < nw_; ++j) {
      if (lp.lower[j] == lp.upper[j]) continue;
      if (std::isfinite(lp.lower[j])) near.push_back({std::abs(w[j] - lp.lower[j]) / std::max(1.0, std::abs(lp.lower[j])), 0, j});
      if (std::isfinite(lp.upper[j])) near.push_back({std::abs(lp.upper[j] - w[j]) / std::max(1.0, std::abs(lp.upper[j])), 1, j});
    }
    for (int i = 0; i < lp.num_rows(); ++i) {
      const auto& r = lp.rows[i];
      if (r.relation == Relation::Equal) continue;
      near.push_back({std::abs(r.coeffs.dot(w) - r.rhs) / std::max(1.0, std::abs(r.rhs)), 2, i});
    }
    std::stable_sort(near.begin(), near.end(), [](const Near& a, const Near& b) { return a.slack < b.slack; });

    std::optional<Vector> best;
    double best_val = kInf;
    const int tries = std::min<int>(static_cast<int>(near.size()), 60);
    for (int r = 0; r <= tries; ++r) {
      if (r > 0 && r < static_cast<int>(near.size()) && near[r].slack == near[r - 1].slack) continue;
      std::vector<signed char> at(nw_, -1);  // -1 free, 0 lower, 1 upper
      for (int j = 0; j < nw_; ++j)
        if (lp.lower[j] == lp.upper[j]) at[j] = 0;
      std::vector<int> active_rows;
      for (int i = 0; i < lp.num_rows(); ++i)
        if (lp.rows[i].relation == Relation::Equal) active_rows.push_back(i);
      for (int q = 0; q < r; ++q) {
        if (near[q].kind == 2) active_rows.push_back(near[q].index);
        else if (at[near[q].index] < 0) at[near[q].index] = static_cast<signed char>(near[q].kind);
      }
      if (auto cand = solve_face(lp, at, active_rows)) {
        const double v = f_.value(positions(*cand));
        if (v < best_val) {
          best_val = v;
          best = cand;
        }
      }
    }
    return best;
  }

  std::optional<Vector> solve_face(const LpModel& lp, const std::vector<signed char>& at,
                                   const std::vector<int>& active_rows) const {
    IndexSet free_vars;
    Vector fixed_part = Vector::Zero(nw_);
    for (int j = 0; j < nw_; ++j) {
      if (at[j] < 0) free_vars.push_back(j);
      else fixed_part[j] = at[j] == 0 ? lp.lower[j] : lp.upper[j];
    }
    if (free_vars.empty() || free_vars.size() > 400) return std::nullopt;
    const int nf = static_cast<int>(free_vars.size()), na = static_cast<int>(active_rows.size());
    // Hessian of f in w on the free block: 2 lambda P^T Qe P with P = [I, -I, 0, 0].
    Matrix P = Matrix::Zero(n_, nf);
    for (int c = 0; c < nf; ++c) {
      const int j = free_vars[c];
      if (j < n_) P(j, c) = 1.0;
      else if (j < 2 * n_) P(j - n_, c) = -1.0;
    }
    Matrix QP(n_, nf);
    for (int c = 0; c < nf; ++c) QP.col(c) = f_.apply(P.col(c));
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nf + na, nf + na);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + na);
    K.topLeftCorner(nf, nf) = 2.0 * f_.lambda() * (P.transpose() * QP);
    rhs.head(nf) = -(P.transpose() * f_.gradient(positions(fixed_part)));
    for (int a = 0; a < na; ++a) {
      const auto& r = lp.rows[active_rows[a]];
      for (int c = 0; c < nf; ++c) K(nf + a, c) = K(c, nf + a) = r.coeffs[free_vars[c]];
      rhs[nf + a] = r.rhs - r.coeffs.dot(fixed_part);
    }
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite() || (K * sol - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm())) return std::nullopt;
    Vector cand = fixed_part;
    for (int c = 0; c < nf; ++c) cand[free_vars[c]] = sol[c];
    if (!feasible(lp, cand)) return std::nullopt;
    return cand;
  }

  Clock::time_point sub_deadline(double fraction) const {
    if (deadline_ == Clock::time_point::max()) return deadline_;
    const auto now = Clock::now();
    if (now >= deadline_) return now;
    return now + std::chrono::duration_cast<Clock::duration>((deadline_ - now) * fraction);
  }

  PortfolioInstance p_;
  detail::PortfolioObjective f_;
  PortfolioOptions opt_;
  int n_ = 0;
  int nw_ = 0;
  Clock::time_point deadline_ = Clock::time_point::max();
};

/// Checks the instance, builds the (optionally reduced-rank) objective and runs the tree.
inline SolveReport solve_portfolio(const PortfolioInstance& inst, const BnbConfig& config = {},
                                   const PortfolioOptions& options = {}) {
  inst.validate();
  const SymmetricEigen eig = eigh_sym(inst.Q, 1e-12);
  if (eig.values.size() > 0 && eig.values[eig.values.size() - 1] < -1e-8)
    throw std::invalid_argument("portfolio: Q is not positive semidefinite");
  std::optional<ReducedRank> rr;
  if (inst.H) rr = reduced_rank_from(inst.Q, eig, *inst.H);
  PortfolioAdapter adapter(inst, rr, options);
  return run(adapter, config);
}

}  // namespace cardopt
