#pragma once

// Dense bounded-variable two-phase primal simplex.
//
// Every row a^T x (<=|=|>=) rhs receives a slack s with a^T x + s = rhs and
// bounds chosen by the relation; rows whose slack cannot absorb the initial
// residual get a phase-1 artificial. The basis inverse is kept explicitly,
// updated in product form and refactored from scratch every 50 pivots.
//
// A solve can be warm-started from an earlier optimal basis of a model with
// the same rows; bound changes are then repaired by dual simplex pivots.

#include "cardopt/core.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cardopt {

enum class Relation { LessEq, Equal, GreaterEq };

struct LpRow {
  Vector coeffs;
  Relation relation = Relation::LessEq;
  double rhs = 0.0;
};

/// minimize c^T x  s.t.  rows, lower <= x <= upper
struct LpModel {
  Vector objective;
  std::vector<LpRow> rows;
  Vector lower;
  Vector upper;

  LpModel() = default;
  explicit LpModel(int num_vars)
      : objective(Vector::Zero(num_vars)),
        lower(Vector::Zero(num_vars)),
        upper(Vector::Constant(num_vars, kInf)) {}

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  void add_row(Vector coeffs, Relation rel, double rhs) {
    rows.push_back(LpRow{std::move(coeffs), rel, rhs});
  }

  void validate() const {
    const auto n = objective.size();
    if (lower.size() != n || upper.size() != n) throw std::invalid_argument("lp: bound length mismatch");
    for (const auto& r : rows)
      if (r.coeffs.size() != n) throw std::invalid_argument("lp: row length mismatch");
    for (Eigen::Index j = 0; j < n; ++j)
      if (lower[j] > upper[j]) throw std::invalid_argument("lp: lower bound exceeds upper bound");
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

/// Basis over structural and slack columns (slack of kept row i is column n + i).
struct LpBasis {
  std::vector<int> basic;
  std::vector<signed char> at_upper;  // per column, for nonbasic columns
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
  Vector duals;  // one per model row, y = c_B^T B^{-1}
  int iterations = 0;
  std::optional<LpBasis> basis;  // set for optimal solves without basic artificials
};

struct LpOptions {
  double pivot_tol = 1e-9;
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  int refactor_every = 50;
  int max_iterations = 0;  // 0: derived from problem size
};

class LpNumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class BoundedSimplex {
 public:
  BoundedSimplex(const LpModel& model, const LpOptions& opt) : model_(model), opt_(opt) {}

  LpResult solve() {
    if (!prepare_rows()) return infeasible();
    build();
    if (m_ == 0) return solve_without_rows();

    // Phase 1.
    if (num_artificial_ > 0) {
      Vector phase1 = Vector::Zero(total_);
      for (int j = first_art_; j < total_; ++j) phase1[j] = 1.0;
      cost_ = phase1;
      const bool bounded = iterate();
      if (!bounded) throw LpNumericalError("lp: phase 1 reported unbounded");
      double infeas = 0.0;
      for (int j = first_art_; j < total_; ++j) infeas += value(j);
      double rhs_scale = 1.0;
      for (int i : kept_rows_) rhs_scale = std::max(rhs_scale, std::abs(model_.rows[i].rhs));
      if (infeas > opt_.feas_tol * rhs_scale * 10.0) return infeasible();
      for (int j = first_art_; j < total_; ++j) upper_[j] = 0.0;
      for (int j = first_art_; j < total_; ++j)
        if (state_[j] != kBasic) {
          state_[j] = kAtLower;
          x_[j] = 0.0;
        }
    }

    // Phase 2.
    cost_ = Vector::Zero(total_);
    cost_.head(n_) = model_.objective;
    if (!iterate()) {
      LpResult r;
      r.status = LpStatus::Unbounded;
      r.x = x_.head(n_);
      r.iterations = iterations_;
      return r;
    }
    refactor();
    return optimal();
  }

  /// Dual simplex from `warm`, then primal clean-up. nullopt when the basis
  /// does not fit this model or is not dual feasible; the caller then solves cold.
  std::optional<LpResult> solve_warm(const LpBasis& warm) {
    if (!prepare_rows()) return infeasible();
    if (m_ == 0) return solve_without_rows();
    const int cols = static_cast<int>(n_) + m_;
    if (static_cast<int>(warm.basic.size()) != m_ || static_cast<int>(warm.at_upper.size()) != cols) return std::nullopt;
    build_columns(0);
    std::vector<bool> in_basis(cols, false);
    for (int j : warm.basic) {
      if (j < 0 || j >= cols || in_basis[j]) return std::nullopt;
      in_basis[j] = true;
    }
    basis_ = warm.basic;
    for (int j = 0; j < cols; ++j) {
      if (in_basis[j]) {
        state_[j] = kBasic;
        continue;
      }
      const bool up = warm.at_upper[j] != 0;
      if (up && std::isfinite(upper_[j])) place(j, kAtUpper);
      else if (std::isfinite(lower_[j])) place(j, kAtLower);
      else if (std::isfinite(upper_[j])) place(j, kAtUpper);
      else place(j, kFreeZero);
    }
    refactor();
    cost_ = Vector::Zero(total_);
    cost_.head(n_) = model_.objective;

    // Dual feasibility of the starting basis.
    const Eigen::RowVectorXd d = reduced_costs();
    const double dtol = 1e-7;
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == kBasic || upper_[j] - lower_[j] <= 0.0) continue;
      if ((state_[j] == kAtLower && d[j] < -dtol) || (state_[j] == kAtUpper && d[j] > dtol) ||
          (state_[j] == kFreeZero && std::abs(d[j]) > dtol))
        return std::nullopt;
    }
    if (!dual_iterate()) return infeasible();
    if (!iterate()) return unbounded_result();
    if (since_refactor_ >= kWarmRefreshPivots) refactor();
    else recompute_basics();
    return optimal();
  }

 private:
  static constexpr int kBasic = 0;
  static constexpr int kAtLower = 1;
  static constexpr int kAtUpper = 2;
  static constexpr int kFreeZero = 3;
  static constexpr int kWarmRefreshPivots = 10;

  LpResult infeasible() const {
    LpResult r;
    r.status = LpStatus::Infeasible;
    r.x = Vector::Zero(model_.num_vars());
    r.duals = Vector::Zero(model_.num_rows());
    r.iterations = iterations_;
    return r;
  }

  LpResult solve_without_rows() {
    LpResult r;
    r.x = Vector::Zero(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double c = model_.objective[j];
      const double lo = model_.lower[j], up = model_.upper[j];
      if (c > 0.0) {
        if (!std::isfinite(lo)) return unbounded_result();
        r.x[j] = lo;
      } else if (c < 0.0) {
        if (!std::isfinite(up)) return unbounded_result();
        r.x[j] = up;
      } else {
        r.x[j] = std::isfinite(lo) ? lo : (std::isfinite(up) ? up : 0.0);
      }
    }
    r.status = LpStatus::Optimal;
    r.objective = model_.objective.dot(r.x);
    r.duals = Vector::Zero(model_.num_rows());
    return r;
  }

  LpResult unbounded_result() const {
    LpResult r;
    r.status = LpStatus::Unbounded;
    r.x = Vector::Zero(model_.num_vars());
    r.duals = Vector::Zero(model_.num_rows());
    return r;
  }

  /// Validates, checks and drops empty rows. False when the model is trivially infeasible.
  bool prepare_rows() {
    model_.validate();
    n_ = model_.num_vars();
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (model_.lower[j] > model_.upper[j] + opt_.feas_tol) return false;
    }
    for (int i = 0; i < model_.num_rows(); ++i) {
      const auto& r = model_.rows[i];
      if (r.coeffs.size() == 0 || r.coeffs.cwiseAbs().maxCoeff() == 0.0) {
        const bool ok = (r.relation == Relation::LessEq && 0.0 <= r.rhs + opt_.feas_tol) ||
                        (r.relation == Relation::GreaterEq && 0.0 >= r.rhs - opt_.feas_tol) ||
                        (r.relation == Relation::Equal && std::abs(r.rhs) <= opt_.feas_tol);
        if (!ok) return false;
        continue;
      }
      kept_rows_.push_back(i);
    }
    m_ = static_cast<int>(kept_rows_.size());
    return true;
  }

  void place(int j, int st) {
    state_[j] = st;
    x_[j] = st == kAtLower ? lower_[j] : st == kAtUpper ? upper_[j] : 0.0;
  }

  /// Bounds, column matrix and right-hand side for structural, slack and
  /// `num_art` artificial columns. Artificial entries are filled by build().
  void build_columns(int num_art) {
    const int slack0 = static_cast<int>(n_);
    num_artificial_ = num_art;
    first_art_ = static_cast<int>(n_) + m_;
    total_ = first_art_ + num_art;
    x_ = Vector::Zero(total_);
    lower_ = Vector::Zero(total_);
    upper_ = Vector::Zero(total_);
    state_.assign(total_, kAtLower);
    lower_.head(n_) = model_.lower;
    upper_.head(n_) = model_.upper;
    for (int i = 0; i < m_; ++i) {
      const int sl = slack0 + i;
      switch (model_.rows[kept_rows_[i]].relation) {
        case Relation::LessEq: lower_[sl] = 0.0; upper_[sl] = kInf; break;
        case Relation::GreaterEq: lower_[sl] = -kInf; upper_[sl] = 0.0; break;
        case Relation::Equal: lower_[sl] = 0.0; upper_[sl] = 0.0; break;
      }
    }
    cols_ = Eigen::MatrixXd::Zero(m_, total_);
    rhs_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      cols_.row(i).head(n_) = model_.rows[kept_rows_[i]].coeffs.transpose();
      cols_(i, slack0 + i) = 1.0;
      rhs_[i] = model_.rows[kept_rows_[i]].rhs;
    }
    max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations : 200 * (total_ + m_) + 1000;
  }

  void build() {
    // Structural columns, then one slack per kept row, then artificials.
    const int slack0 = static_cast<int>(n_);
    build_columns(0);
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (std::isfinite(lower_[j])) place(static_cast<int>(j), kAtLower);
      else if (std::isfinite(upper_[j])) place(static_cast<int>(j), kAtUpper);
      else place(static_cast<int>(j), kFreeZero);
    }
    const Vector residual = rhs_ - cols_.leftCols(n_) * x_.head(n_);

    std::vector<double> art_sign;
    std::vector<int> art_row;
    basis_.assign(m_, -1);
    for (int i = 0; i < m_; ++i) {
      const int s = slack0 + i;
      const double r = residual[i];
      if (r >= lower_[s] - opt_.feas_tol && r <= upper_[s] + opt_.feas_tol) {
        basis_[i] = s;
        state_[s] = kBasic;
        x_[s] = r;
      } else {
        const double bound = r < lower_[s] ? lower_[s] : upper_[s];
        state_[s] = r < lower_[s] ? kAtLower : kAtUpper;
        x_[s] = bound;
        art_row.push_back(i);
        art_sign.push_back(r - bound > 0.0 ? 1.0 : -1.0);
      }
    }

    const Vector structural = x_.head(n_ + m_);
    const std::vector<int> states(state_.begin(), state_.end());
    build_columns(static_cast<int>(art_row.size()));
    x_.head(n_ + m_) = structural;
    std::copy(states.begin(), states.end(), state_.begin());
    for (int a = 0; a < num_artificial_; ++a) {
      const int j = first_art_ + a;
      const int i = art_row[a];
      cols_(i, j) = art_sign[a];
      lower_[j] = 0.0;
      upper_[j] = kInf;
      basis_[i] = j;
      state_[j] = kBasic;
      x_[j] = std::abs(residual[i] - x_[slack0 + i]);
    }
    refactor();
  }

  double value(int j) const { return x_[j]; }

  // Basic slack columns are unit vectors, so only the k x k block of the
  // remaining basic columns on rows without a basic slack is factorized:
  // with B = [B1 I; B2 0] (slack rows first), B^{-1} = [0 B2^{-1}; I -B1 B2^{-1}].
  void refactor() {
    const int slack0 = static_cast<int>(n_);
    std::vector<int> row_pos(m_, -1);  // basis position of the slack basic in each row
    std::vector<int> core_pos, core_rows;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (j >= slack0 && j < slack0 + m_) row_pos[j - slack0] = i;
      else core_pos.push_back(i);
    }
    for (int r = 0; r < m_; ++r)
      if (row_pos[r] < 0) core_rows.push_back(r);
    const int k = static_cast<int>(core_pos.size());
    if (static_cast<int>(core_rows.size()) != k) throw LpNumericalError("lp: singular basis");

    binv_.setZero(m_, m_);
    Eigen::MatrixXd core_inv(k, k);
    if (k > 0) {
      Eigen::MatrixXd B2(k, k);
      for (int c = 0; c < k; ++c)
        for (int r = 0; r < k; ++r) B2(r, c) = cols_(core_rows[r], basis_[core_pos[c]]);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(B2);
      core_inv = lu.inverse();
      if (!core_inv.allFinite()) throw LpNumericalError("lp: singular basis");
    }
    for (int a = 0; a < k; ++a)
      for (int c = 0; c < k; ++c) binv_(core_pos[a], core_rows[c]) = core_inv(a, c);
    for (int r = 0; r < m_; ++r) {
      const int pos = row_pos[r];
      if (pos < 0) continue;
      binv_(pos, r) = 1.0;
      if (k == 0) continue;
      Eigen::RowVectorXd b1(k);
      for (int c = 0; c < k; ++c) b1[c] = cols_(r, basis_[core_pos[c]]);
      const Eigen::RowVectorXd coupling = b1 * core_inv;
      for (int c = 0; c < k; ++c) binv_(pos, core_rows[c]) = -coupling[c];
    }
    recompute_basics();
    since_refactor_ = 0;
  }

  // Basic values from the nonbasic ones under the current inverse.
  void recompute_basics() {
    Vector rhs = rhs_;
    for (int j = 0; j < total_; ++j)
      if (state_[j] != kBasic && x_[j] != 0.0) rhs -= cols_.col(j) * x_[j];
    const Vector xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  double objective_now() const {
    double v = 0.0;
    for (int j = 0; j < total_; ++j)
      if (cost_[j] != 0.0) v += cost_[j] * x_[j];
    return v;
  }

  Eigen::RowVectorXd reduced_costs() const {
    Vector cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    const Vector y = binv_.transpose() * cb;
    return cost_.transpose() - y.transpose() * cols_;
  }

  /// Basis exchange: row `leave` goes to `leave_bound`, `enter` becomes basic.
  void replace_basic(int leave, int enter, const Vector& alpha, double leave_bound) {
    const int out = basis_[leave];
    x_[out] = leave_bound;
    state_[out] = leave_bound == lower_[out] ? kAtLower : kAtUpper;
    basis_[leave] = enter;
    state_[enter] = kBasic;
    const double piv = alpha[leave];
    binv_.row(leave) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == leave || alpha[i] == 0.0) continue;
      binv_.row(i) -= alpha[i] * binv_.row(leave);
    }
    if (++since_refactor_ >= opt_.refactor_every) refactor();
  }

  // Dual simplex on a dual feasible basis. Returns false when a primal
  // infeasible row admits no entering column (the LP is infeasible).
  bool dual_iterate() {
    while (true) {
      if (++iterations_ > max_iter_) throw LpNumericalError("lp: dual iteration limit exceeded");
      int r = -1;
      double worst = 0.0;
      for (int i = 0; i < m_; ++i) {
        const int bv = basis_[i];
        const double tol = opt_.feas_tol * std::max(1.0, std::abs(x_[bv]));
        double viol = 0.0;
        if (x_[bv] < lower_[bv] - tol) viol = lower_[bv] - x_[bv];
        else if (x_[bv] > upper_[bv] + tol) viol = x_[bv] - upper_[bv];
        if (viol > worst) {
          worst = viol;
          r = i;
        }
      }
      if (r < 0) return true;
      const int out = basis_[r];
      const bool to_lower = x_[out] < lower_[out];
      const Eigen::RowVectorXd d = reduced_costs();
      const Eigen::RowVectorXd row = binv_.row(r) * cols_;
      const double piv_floor = opt_.pivot_tol * std::max(1.0, row.cwiseAbs().maxCoeff());

      // x_out moves by -row_j per unit of x_j; it must rise when going to its lower bound.
      int enter = -1;
      double best_ratio = kInf, best_piv = 0.0;
      for (int j = 0; j < total_; ++j) {
        const int st = state_[j];
        if (st == kBasic || upper_[j] - lower_[j] <= 0.0) continue;
        const double a = row[j];
        if (std::abs(a) <= piv_floor) continue;
        const double rise = -a;  // change of x_out when x_j increases
        bool ok = false;
        if (st == kFreeZero) ok = true;
        else if (st == kAtLower) ok = to_lower ? rise > 0.0 : rise < 0.0;
        else ok = to_lower ? rise < 0.0 : rise > 0.0;
        if (!ok) continue;
        const double ratio = std::abs(d[j]) / std::abs(a);
        if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && std::abs(a) > best_piv)) {
          best_ratio = std::min(best_ratio, ratio);
          best_piv = std::abs(a);
          enter = j;
        }
      }
      if (enter < 0) return false;

      const Vector alpha = binv_ * cols_.col(enter);
      const double target = to_lower ? lower_[out] : upper_[out];
      const double t = (x_[out] - target) / alpha[r];
      x_[enter] += t;
      for (int i = 0; i < m_; ++i) x_[basis_[i]] -= t * alpha[i];
      replace_basic(r, enter, alpha, target);
    }
  }

  // Returns false when the objective is unbounded along an improving ray.
  bool iterate() {
    bool bland = false;
    int stall = 0;
    double best = objective_now();
    const int stall_limit = 3 * (m_ + static_cast<int>(n_));
    int retries = 0;

    while (true) {
      if (++iterations_ > max_iter_) throw LpNumericalError("lp: iteration limit exceeded");
      const Eigen::RowVectorXd reduced = reduced_costs();

      int enter = -1;
      double enter_dir = 0.0;
      double best_score = 0.0;
      for (int j = 0; j < total_; ++j) {
        const int st = state_[j];
        if (st == kBasic) continue;
        if (upper_[j] - lower_[j] <= 0.0) continue;
        const double d = reduced[j];
        double dir = 0.0;
        if (d < -opt_.opt_tol && (st == kAtLower || st == kFreeZero)) dir = 1.0;
        else if (d > opt_.opt_tol && (st == kAtUpper || st == kFreeZero)) dir = -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(d) > best_score) {
          best_score = std::abs(d);
          enter = j;
          enter_dir = dir;
        }
      }
      if (enter < 0) return true;

      const Vector alpha = binv_ * cols_.col(enter);
      const double piv_floor = opt_.pivot_tol * std::max(1.0, alpha.cwiseAbs().maxCoeff());
      // Ratio test: basic i changes at rate -dir * alpha_i. Under Bland the
      // lowest variable index leaves on ties; otherwise a Harris pass picks the
      // largest pivot among rows whose relaxed limit fits.
      auto limit_of = [&](int i, double slack_tol, double& hit) {
        const double rate = -enter_dir * alpha[i];
        const int bv = basis_[i];
        hit = 0.0;
        if (rate < 0.0 && std::isfinite(lower_[bv])) {
          hit = lower_[bv];
          return std::max(0.0, (x_[bv] - lower_[bv] + slack_tol) / (-rate));
        }
        if (rate > 0.0 && std::isfinite(upper_[bv])) {
          hit = upper_[bv];
          return std::max(0.0, (upper_[bv] - x_[bv] + slack_tol) / rate);
        }
        return kInf;
      };
      double theta = upper_[enter] - lower_[enter];
      int leave = -1;
      double leave_bound = 0.0;
      if (bland) {
        for (int i = 0; i < m_; ++i) {
          if (std::abs(alpha[i]) <= piv_floor) continue;
          double hit;
          const double limit = limit_of(i, 0.0, hit);
          if (!std::isfinite(limit)) continue;
          bool better = limit < theta - 1e-12;
          if (!better && leave >= 0 && limit <= theta + 1e-12 && basis_[i] < basis_[leave]) better = true;
          if (better) {
            theta = std::min(theta, limit);
            leave = i;
            leave_bound = hit;
          }
        }
      } else {
        double relaxed = kInf;
        for (int i = 0; i < m_; ++i) {
          if (std::abs(alpha[i]) <= piv_floor) continue;
          double hit;
          relaxed = std::min(relaxed, limit_of(i, opt_.feas_tol, hit));
        }
        if (relaxed < theta) {
          double best_pivot = 0.0;
          for (int i = 0; i < m_; ++i) {
            if (std::abs(alpha[i]) <= piv_floor) continue;
            double hit;
            const double limit = limit_of(i, 0.0, hit);
            if (limit <= relaxed && std::abs(alpha[i]) > best_pivot) {
              best_pivot = std::abs(alpha[i]);
              leave = i;
              leave_bound = hit;
              theta = limit;
            }
          }
        }
      }
      if (!std::isfinite(theta)) return false;

      if (leave >= 0 && std::abs(alpha[leave]) < 1e-12) {
        if (++retries > 3) throw LpNumericalError("lp: pivot magnitude below 1e-12");
        refactor();
        bland = true;
        continue;
      }

      // Move.
      x_[enter] += enter_dir * theta;
      for (int i = 0; i < m_; ++i) x_[basis_[i]] -= enter_dir * theta * alpha[i];

      if (leave < 0) {
        // Bound flip.
        state_[enter] = enter_dir > 0.0 ? kAtUpper : kAtLower;
        x_[enter] = enter_dir > 0.0 ? upper_[enter] : lower_[enter];
      } else {
        replace_basic(leave, enter, alpha, leave_bound);
      }

      const double now = objective_now();
      if (now < best - 1e-12 * std::max(1.0, std::abs(best))) {
        best = now;
        stall = 0;
      } else if (++stall > stall_limit) {
        bland = true;
      }
    }
  }

  LpResult optimal() {
    LpResult r;
    r.status = LpStatus::Optimal;
    r.x = x_.head(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (std::isfinite(model_.lower[j]) && r.x[j] < model_.lower[j]) r.x[j] = model_.lower[j];
      if (std::isfinite(model_.upper[j]) && r.x[j] > model_.upper[j]) r.x[j] = model_.upper[j];
    }
    r.objective = model_.objective.dot(r.x);
    Vector cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    const Vector y = binv_.transpose() * cb;
    r.duals = Vector::Zero(model_.num_rows());
    for (int i = 0; i < m_; ++i) r.duals[kept_rows_[i]] = y[i];
    r.iterations = iterations_;
    if (std::all_of(basis_.begin(), basis_.end(), [&](int j) { return j < first_art_; })) {
      LpBasis b;
      b.basic = basis_;
      b.at_upper.assign(first_art_, 0);
      for (int j = 0; j < first_art_; ++j) b.at_upper[j] = state_[j] == kAtUpper;
      r.basis = std::move(b);
    }
    return r;
  }

  const LpModel& model_;
  LpOptions opt_;
  Eigen::Index n_ = 0;
  int m_ = 0;
  int total_ = 0;
  int first_art_ = 0;
  int num_artificial_ = 0;
  int iterations_ = 0;
  int max_iter_ = 0;
  int since_refactor_ = 0;
  std::vector<int> kept_rows_;
  Eigen::MatrixXd cols_;
  Vector rhs_;
  Vector x_, lower_, upper_, cost_;
  std::vector<int> state_;
  std::vector<int> basis_;
  Eigen::MatrixXd binv_;
};

}  // namespace detail

inline LpResult solve_lp(const LpModel& model, const LpOptions& options = {}) {
  detail::BoundedSimplex simplex(model, options);
  return simplex.solve();
}

/// Same result contract as solve_lp; starts from `warm` when it applies and
/// falls back to a cold solve otherwise or on numerical trouble.
inline LpResult solve_lp(const LpModel& model, const LpBasis& warm, const LpOptions& options = {}) {
  try {
    detail::BoundedSimplex simplex(model, options);
    if (auto r = simplex.solve_warm(warm)) return *std::move(r);
  } catch (const LpNumericalError&) {
  }
  return solve_lp(model, options);
}

}  // namespace cardopt
