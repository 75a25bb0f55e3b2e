#pragma once

// Mixed-binary models on top of the LP engine, a generic branch-on-fractional
// adapter, the big-M cardinality-minimization builder and LP-file export.

#include "cardopt/bnb.hpp"
#include "cardopt/core.hpp"
#include "cardopt/lp.hpp"

#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

namespace cardopt {

struct MilpModel {
  LpModel base;
  IndexSet integral;  // binaries, bounds [0, 1]

  void validate() const {
    base.validate();
    for (int j : integral) {
      if (j < 0 || j >= base.num_vars()) throw std::invalid_argument("milp: integral index out of range");
      if (base.lower[j] < 0.0 || base.upper[j] > 1.0)
        throw std::invalid_argument("milp: integral variable bounds must lie in [0, 1]");
    }
  }
};

inline constexpr double kIntegralityTol = 1e-6;

/// Branch-and-bound adapter for a MilpModel. `polish` may turn an integral LP
/// point into a verified candidate (or reject it, which forces more branching).
template <bool IntegralObjective>
class MilpAdapter {
 public:
  static constexpr bool kIntegralObjective = IntegralObjective;
  static constexpr bool kExactBounds = true;

  using Polish = std::function<std::optional<Candidate>(const Vector& lp_x)>;

  struct State {
    std::vector<signed char> fix;  // per integral index: -1 free, 0, 1
    std::shared_ptr<const LpBasis> warm;  // parent's optimal basis
  };
  struct Eval {
    double bound = 0.0;
    bool infeasible = false;
    Vector x;
    int branch_pos = -1;  // position in model.integral, -1 when integral
    std::shared_ptr<const LpBasis> basis;
  };

  explicit MilpAdapter(MilpModel model, Polish polish = {}) : model_(std::move(model)), polish_(std::move(polish)) {
    model_.validate();
  }

  const MilpModel& model() const { return model_; }

  State root() const { return State{std::vector<signed char>(model_.integral.size(), -1), nullptr}; }

  Eval evaluate(const State& s) const {
    LpModel lp = model_.base;
    for (std::size_t p = 0; p < model_.integral.size(); ++p) {
      if (s.fix[p] < 0) continue;
      const int j = model_.integral[p];
      lp.lower[j] = lp.upper[j] = s.fix[p];
    }
    Eval e;
    LpResult r = s.warm ? solve_lp(lp, *s.warm) : solve_lp(lp);
    if (r.status == LpStatus::Infeasible) {
      e.infeasible = true;
      return e;
    }
    if (r.status == LpStatus::Unbounded) throw std::runtime_error("milp: unbounded relaxation");
    e.bound = r.objective;
    e.x = r.x;
    if (r.basis) e.basis = std::make_shared<const LpBasis>(std::move(*r.basis));
    double worst = kIntegralityTol;
    for (std::size_t p = 0; p < model_.integral.size(); ++p) {
      const double v = r.x[model_.integral[p]];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > worst) {
        worst = frac;
        e.branch_pos = static_cast<int>(p);
      }
    }
    return e;
  }

  std::vector<State> branch(const State& s, const Eval& e) const {
    int p = e.branch_pos;
    if (p < 0) {
      // Integral but rejected by polish: split on the first free binary.
      if (!polish_ || polish_(e.x)) return {};
      for (std::size_t q = 0; q < s.fix.size(); ++q)
        if (s.fix[q] < 0) {
          p = static_cast<int>(q);
          break;
        }
      if (p < 0) return {};
    }
    State up = s, down = s;
    up.fix[p] = 1;
    down.fix[p] = 0;
    up.warm = down.warm = e.basis;
    return {up, down};
  }

  std::optional<Candidate> incumbent(const State&, const Eval& e) const {
    if (e.branch_pos >= 0) return std::nullopt;
    if (polish_) return polish_(e.x);
    return Candidate{e.x, model_.base.objective.dot(e.x)};
  }

 private:
  MilpModel model_;
  Polish polish_;
};

// ---------------------------------------------------------------------------
// Big-M cardinality minimization

using BigMSpec = std::variant<double, VarBounds>;

/// Variable layout of a big-M model: x at [0, n), y at [n, 2n), L1 slacks after.
struct BigMLayout {
  int n = 0;
  int m = 0;
  int x(int j) const { return j; }
  int y(int j) const { return n + j; }
  int t(int i) const { return 2 * n + i; }
};

inline MilpModel build_bigm_cardmin(const ProblemInstance& inst, const BigMSpec& spec) {
  inst.validate();
  const auto* cm = std::get_if<CardMin>(&inst.kind);
  if (!cm) throw std::invalid_argument("build_bigm_cardmin: CardMin instance required");
  const bool equality = cm->delta == 0.0;
  if (!equality && cm->residual_norm == ResidualNorm::L2)
    throw std::invalid_argument("build_bigm_cardmin: L2 residual with delta > 0 is not linear");

  const int n = inst.cols(), m = inst.rows();
  Vector lo(n), up(n);
  if (const double* M = std::get_if<double>(&spec)) {
    if (!(*M > 0.0)) throw std::invalid_argument("build_bigm_cardmin: M must be positive");
    lo.setConstant(-*M);
    up.setConstant(*M);
  } else {
    const auto& vb = std::get<VarBounds>(spec);
    if (vb.lower.size() != n || vb.upper.size() != n)
      throw std::invalid_argument("build_bigm_cardmin: bound length mismatch");
    for (int j = 0; j < n; ++j)
      if (vb.lower[j] > 0.0 || vb.upper[j] < 0.0)
        throw std::invalid_argument("build_bigm_cardmin: bounds must satisfy l <= 0 <= u");
    lo = vb.lower;
    up = vb.upper;
  }

  const bool l1 = !equality && cm->residual_norm == ResidualNorm::L1;
  const BigMLayout lay{n, m};
  const int nv = 2 * n + (l1 ? m : 0);
  MilpModel model;
  model.base = LpModel(nv);
  for (int j = 0; j < n; ++j) {
    model.base.lower[lay.x(j)] = -kInf;
    model.base.upper[lay.x(j)] = kInf;
    model.base.upper[lay.y(j)] = 1.0;
    model.base.objective[lay.y(j)] = 1.0;
    model.integral.push_back(lay.y(j));
  }

  for (int i = 0; i < m; ++i) {
    Vector row = Vector::Zero(nv);
    row.head(n) = inst.A.row(i).transpose();
    if (equality) {
      model.base.add_row(row, Relation::Equal, inst.b[i]);
    } else if (!l1) {
      model.base.add_row(row, Relation::LessEq, inst.b[i] + cm->delta);
      model.base.add_row(row, Relation::GreaterEq, inst.b[i] - cm->delta);
    } else {
      // |a_i x - b_i| <= t_i
      Vector r1 = row, r2 = row;
      r1[lay.t(i)] = -1.0;
      r2[lay.t(i)] = 1.0;
      model.base.add_row(r1, Relation::LessEq, inst.b[i]);
      model.base.add_row(r2, Relation::GreaterEq, inst.b[i]);
    }
  }
  if (l1) {
    Vector row = Vector::Zero(nv);
    for (int i = 0; i < m; ++i) row[lay.t(i)] = 1.0;
    model.base.add_row(row, Relation::LessEq, cm->delta);
  }
  for (int j = 0; j < n; ++j) {
    Vector r1 = Vector::Zero(nv), r2 = Vector::Zero(nv);
    r1[lay.x(j)] = 1.0;
    r1[lay.y(j)] = -up[j];
    r2[lay.x(j)] = 1.0;
    r2[lay.y(j)] = -lo[j];
    model.base.add_row(r1, Relation::LessEq, 0.0);
    model.base.add_row(r2, Relation::GreaterEq, 0.0);
  }
  return model;
}

// ---------------------------------------------------------------------------
// LP file export

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string fmt_bound(double v) {
  if (v == kInf) return "+inf";
  if (v == -kInf) return "-inf";
  return fmt_num(v);
}

inline std::string linear_expr(const Vector& c, const std::vector<std::string>& names) {
  std::string out;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (c[j] == 0.0) continue;
    if (out.empty()) {
      out += fmt_num(c[j]) + " " + names[j];
    } else {
      out += c[j] < 0.0 ? " - " : " + ";
      out += fmt_num(std::abs(c[j])) + " " + names[j];
    }
  }
  return out.empty() ? "0" : out;
}

}  // namespace detail

/// Continuous variables are named x1.., binaries y1.., both in index order.
inline std::vector<std::string> lp_variable_names(const MilpModel& model) {
  const int n = model.base.num_vars();
  std::vector<bool> is_int(n, false);
  for (int j : model.integral) is_int[j] = true;
  std::vector<std::string> names(n);
  int nx = 0, ny = 0;
  for (int j = 0; j < n; ++j) names[j] = is_int[j] ? "y" + std::to_string(++ny) : "x" + std::to_string(++nx);
  return names;
}

inline std::string export_lp_file(const MilpModel& model) {
  model.validate();
  const auto names = lp_variable_names(model);
  const auto& lp = model.base;
  std::vector<bool> is_int(lp.num_vars(), false);
  for (int j : model.integral) is_int[j] = true;

  std::ostringstream os;
  os << "Minimize\n obj: " << detail::linear_expr(lp.objective, names) << "\nSubject To";
  for (int i = 0; i < lp.num_rows(); ++i) {
    const auto& r = lp.rows[i];
    const char* rel = r.relation == Relation::LessEq ? "<=" : (r.relation == Relation::Equal ? "=" : ">=");
    os << "\n c" << i + 1 << ": " << detail::linear_expr(r.coeffs, names) << " " << rel << " "
       << detail::fmt_num(r.rhs);
  }

  std::vector<std::string> bounds;
  for (int j = 0; j < lp.num_vars(); ++j) {
    if (is_int[j]) continue;
    const double lo = lp.lower[j], up = lp.upper[j];
    if (lo == 0.0 && up == kInf) continue;
    if (lo == -kInf && up == kInf) bounds.push_back(" " + names[j] + " free");
    else if (up == kInf) bounds.push_back(" " + detail::fmt_bound(lo) + " <= " + names[j]);
    else if (lo == 0.0) bounds.push_back(" " + names[j] + " <= " + detail::fmt_bound(up));
    else bounds.push_back(" " + detail::fmt_bound(lo) + " <= " + names[j] + " <= " + detail::fmt_bound(up));
  }
  if (!bounds.empty()) {
    os << "\nBounds";
    for (const auto& b : bounds) os << "\n" << b;
  }
  if (!model.integral.empty()) {
    os << "\nBinary";
    for (int j = 0; j < lp.num_vars(); ++j)
      if (is_int[j]) os << "\n " << names[j];
  }
  os << "\nEnd";
  return os.str();
}

}  // namespace cardopt
