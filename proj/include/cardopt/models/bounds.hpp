#pragma once

// Per-variable bounds for big-M models: closed-form ellipsoid extremes and
// LP-based tightening under a relaxed cardinality cap.

#include "cardopt/core.hpp"
#include "cardopt/lp.hpp"

#include <Eigen/Cholesky>

#include <optional>

namespace cardopt {

/// Coordinate extremes of {x : (x - b)^T Q (x - b) <= eps}.
inline VarBounds ellipsoid_bounds(const Matrix& Q, const Vector& b, double eps) {
  if (Q.rows() != Q.cols() || Q.rows() != b.size()) throw std::invalid_argument("ellipsoid_bounds: dimension mismatch");
  if (!(eps > 0.0)) throw std::invalid_argument("ellipsoid_bounds: eps must be positive");
  const auto eig = eigh_sym(Q);
  if (eig.values.size() > 0 && eig.values[eig.values.size() - 1] <= 1e-10)
    throw std::invalid_argument("ellipsoid_bounds: Q is not positive definite");
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  const Eigen::MatrixXd Qinv = llt.solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
  VarBounds vb{Vector(b.size()), Vector(b.size())};
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double r = std::sqrt(eps * Qinv(i, i));
    vb.lower[i] = b[i] - r;
    vb.upper[i] = b[i] + r;
  }
  return vb;
}

enum class TightenStatus { Bounded, Unbounded };

struct TightenResult {
  TightenStatus status = TightenStatus::Bounded;
  VarBounds bounds;
  double final_M = 0.0;
  int sweeps = 0;
  int lp_solves = 0;
};

struct TightenOptions {
  double M0 = 10.0;
  double growth = 2.0;
  double M_cap = 1e8;
  int max_sweeps = 200;
  double sweep_tol = 1e-10;
};

/// Bounds for solutions of Ax = b with at most m nonzeros. Validity rests on M
/// covering every such solution; M grows until no LP saturates it and the
/// result repeats at the next M.
///
/// Coordinate i's LP: min/max x_i s.t. Ax = b, L_j z_j <= x_j <= U_j z_j,
/// 1^T z <= m, z in [0, 1]^n, where (L_j, U_j) are already tightened bounds
/// for j < i and (-M, M) otherwise. Later sweeps substitute all tightened
/// bounds until no bound moves by more than sweep_tol.
inline TightenResult tighten_bounds(const ProblemInstance& inst, const TightenOptions& opt = {}) {
  inst.validate();
  const auto* cm = std::get_if<CardMin>(&inst.kind);
  if (!cm || cm->delta != 0.0) throw std::invalid_argument("tighten_bounds: CardMin equality instance required");
  if (!(opt.M0 > 0.0)) throw std::invalid_argument("tighten_bounds: M0 must be positive");
  if (!(opt.growth > 1.0)) throw std::invalid_argument("tighten_bounds: growth must exceed 1");
  const int m = inst.rows(), n = inst.cols();
  if (matrix_rank(inst.A) != m) throw std::invalid_argument("tighten_bounds: A must have full row rank");

  IndexSet all(n);
  for (int j = 0; j < n; ++j) all[j] = j;
  if (least_squares(inst.A, inst.b, all).residual > residual_tolerance(inst.b))
    throw std::runtime_error("tighten_bounds: inconsistent system Ax = b");

  TightenResult res;
  Vector lo = Vector::Constant(n, -kInf), up = Vector::Constant(n, kInf);
  std::vector<bool> known(n, false);

  // Variables: x in [0, n), z in [n, 2n).
  auto solve = [&](int i, double sense, double M, bool& saturated) -> LpResult {
    LpModel lp(2 * n);
    for (int j = 0; j < n; ++j) {
      lp.lower[j] = -kInf;
      lp.upper[j] = kInf;
      lp.upper[n + j] = 1.0;
    }
    lp.objective[i] = sense;
    for (int r = 0; r < m; ++r) {
      Vector row = Vector::Zero(2 * n);
      row.head(n) = inst.A.row(r).transpose();
      lp.add_row(row, Relation::Equal, inst.b[r]);
    }
    for (int j = 0; j < n; ++j) {
      const double L = known[j] ? lo[j] : -M;
      const double U = known[j] ? up[j] : M;
      Vector r1 = Vector::Zero(2 * n), r2 = Vector::Zero(2 * n);
      r1[j] = 1.0;
      r1[n + j] = -U;
      r2[j] = 1.0;
      r2[n + j] = -L;
      lp.add_row(r1, Relation::LessEq, 0.0);
      lp.add_row(r2, Relation::GreaterEq, 0.0);
    }
    Vector card = Vector::Zero(2 * n);
    card.tail(n).setOnes();
    lp.add_row(card, Relation::LessEq, static_cast<double>(m));
    ++res.lp_solves;
    LpResult r = solve_lp(lp);
    saturated = false;
    if (r.status == LpStatus::Optimal)
      for (int j = 0; j < n; ++j)
        if (!known[j] && std::abs(r.x[j]) >= M * (1.0 - 1e-9)) saturated = true;
    return r;
  };

  const double zero_scale = 1e-9 * std::max(1.0, inst.b.cwiseAbs().maxCoeff());
  auto snap = [&](double v) { return std::abs(v) <= zero_scale ? 0.0 : v; };

  // One complete attempt at a fixed M: first pass, then sweeps. Returns false
  // when M must grow (an infeasible or saturated LP, or crossed bounds).
  auto attempt = [&](double M) -> bool {
    lo.setConstant(-kInf);
    up.setConstant(kInf);
    std::fill(known.begin(), known.end(), false);
    for (int i = 0; i < n; ++i) {
      double vals[2];
      for (int side = 0; side < 2; ++side) {
        bool saturated = false;
        LpResult r = solve(i, side == 0 ? 1.0 : -1.0, M, saturated);
        // The LP is bounded by construction; an unbounded report only happens
        // through loss of accuracy at large M and is treated like saturation.
        if (r.status != LpStatus::Optimal || saturated) return false;
        vals[side] = r.x[i];
      }
      lo[i] = snap(vals[0]);
      up[i] = snap(vals[1]);
      known[i] = true;
    }
    res.sweeps = 1;
    for (; res.sweeps < opt.max_sweeps; ++res.sweeps) {
      double change = 0.0;
      for (int i = 0; i < n; ++i) {
        bool sat = false;
        LpResult rmin = solve(i, 1.0, M, sat);
        LpResult rmax = solve(i, -1.0, M, sat);
        if (rmin.status != LpStatus::Optimal || rmax.status != LpStatus::Optimal) return false;
        const double nl = snap(std::max(lo[i], rmin.x[i]));
        const double nu = snap(std::min(up[i], rmax.x[i]));
        if (nl > nu + 1e-9 * std::max(1.0, std::abs(nu))) return false;
        change = std::max({change, nl - lo[i], up[i] - nu});
        lo[i] = nl;
        up[i] = nu;
      }
      if (change <= opt.sweep_tol) {
        ++res.sweeps;
        break;
      }
    }
    return true;
  };

  // Accept only when two consecutive values of M agree, so a run that starts
  // below the largest sparse-solution magnitude keeps growing.
  double M = opt.M0;
  std::optional<VarBounds> previous;
  while (true) {
    if (attempt(M)) {
      const double scale = std::max(1.0, std::max(lo.cwiseAbs().maxCoeff(), up.cwiseAbs().maxCoeff()));
      if (previous && (previous->lower - lo).cwiseAbs().maxCoeff() <= 1e-7 * scale &&
          (previous->upper - up).cwiseAbs().maxCoeff() <= 1e-7 * scale)
        break;
      previous = VarBounds{lo, up};
    } else {
      previous.reset();
    }
    M *= opt.growth;
    if (M > opt.M_cap) {
      res.status = TightenStatus::Unbounded;
      res.final_M = M;
      res.bounds = VarBounds{lo, up};
      return res;
    }
  }
  res.final_M = M;
  res.bounds = VarBounds{lo, up};
  return res;
}

}  // namespace cardopt
