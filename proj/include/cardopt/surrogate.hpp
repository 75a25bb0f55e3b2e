#pragma once

// l1 surrogates: basis pursuit by LP and ADMM, l1-regularized least squares by
// proximal gradient and by the homotopy path, and LASSO by spectral projected
// gradient.
//
// l1-LS is minimized internally as lambda ||x||_1 + 1/2 ||Ax - b||^2; reported
// objectives use ||x||_1 + ||Ax - b||^2 / (2 lambda). Same minimizers.

#include "cardopt/core.hpp"
#include "cardopt/lp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <deque>
#include <optional>
#include <variant>

namespace cardopt {

namespace steps {
struct Fixed {
  double gamma;
};
struct Lipschitz {};
struct BacktrackingArmijo {};
}  // namespace steps

using StepRule = std::variant<steps::Fixed, steps::Lipschitz, steps::BacktrackingArmijo>;

struct SolverOptions {
  int max_iter = 20000;
  double tol = 1e-8;
  StepRule step_rule = steps::Lipschitz{};
  bool accelerate = false;

  void validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("solver options: tol must be positive");
    if (max_iter < 0) throw std::invalid_argument("solver options: negative max_iter");
    if (const auto* f = std::get_if<steps::Fixed>(&step_rule); f && !(f->gamma > 0.0))
      throw std::invalid_argument("solver options: fixed step must be positive");
  }
};

/// 1/L for f = 1/2 ||Ax - b||^2, with a 5% margin over the power-iteration estimate.
inline double lipschitz_step(const Matrix& A) {
  const double L = power_iteration_norm_sq(A);
  return L > 0.0 ? 1.0 / (1.05 * L) : 1.0;
}

// ---------------------------------------------------------------------------
// Basis pursuit

/// min ||x||_1 s.t. Ax = b through the split x = x+ - x-.
inline Solution bp_lp(const Matrix& A, const Vector& b) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (b.size() != m) throw std::invalid_argument("bp_lp: dimension mismatch");
  LpModel lp(2 * n);
  lp.objective.setOnes();
  for (int i = 0; i < m; ++i) {
    Vector row(2 * n);
    row.head(n) = A.row(i).transpose();
    row.tail(n) = -A.row(i).transpose();
    lp.add_row(row, Relation::Equal, b[i]);
  }
  const LpResult r = solve_lp(lp);
  if (r.status != LpStatus::Optimal) {
    Solution s = make_solution(Vector::Zero(n), kInf, SolveStatus::Infeasible, r.iterations);
    return s;
  }
  const Vector x = r.x.head(n) - r.x.tail(n);
  return make_solution(x, x.lpNorm<1>(), SolveStatus::Optimal, r.iterations);
}

/// Scaled ADMM on min ||z||_1 s.t. x = z, Ax = b. The x-step projects onto
/// {Ax = b}, the z-step soft-thresholds; rho is rebalanced every 10 iterations
/// during the first 1000.
inline Solution bp_admm(const Matrix& A, const Vector& b, double rho = 1.0, SolverOptions opts = {}) {
  opts.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("bp_admm: rho must be positive");
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (b.size() != m) throw std::invalid_argument("bp_admm: dimension mismatch");
  if (matrix_rank(A) != m) throw std::invalid_argument("bp_admm: A must have full row rank");

  const Eigen::LLT<Eigen::MatrixXd> gram(A * A.transpose());
  auto project = [&](const Vector& v) -> Vector { return v - A.transpose() * gram.solve(A * v - b); };

  Vector z = Vector::Zero(n), u = Vector::Zero(n), x = project(z);
  int it = 0;
  bool converged = false;
  for (; it < opts.max_iter; ++it) {
    x = project(z - u);
    const Vector z_old = z;
    z = threshold(x + u, thresholds::Soft{1.0 / rho});
    u += x - z;
    const double primal = (x - z).lpNorm<Eigen::Infinity>();
    const double dual = rho * (z - z_old).lpNorm<Eigen::Infinity>();
    if (primal <= opts.tol && dual <= opts.tol) {
      converged = true;
      ++it;
      break;
    }
    // Rebalancing stops after a warm-up so rho cannot oscillate forever.
    if ((it + 1) % 10 == 0 && it < 1000) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        u /= 2.0;
      } else if (dual > 10.0 * primal) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }
  return make_solution(x, x.lpNorm<1>(), converged ? SolveStatus::Optimal : SolveStatus::IterLimit, it);
}

// ---------------------------------------------------------------------------
// l1-regularized least squares

namespace detail {

inline double l1ls_internal(const Matrix& A, const Vector& b, double lambda, const Vector& x) {
  return lambda * x.lpNorm<1>() + 0.5 * (A * x - b).squaredNorm();
}

/// Optimality violation at x for lambda ||x||_1 + 1/2 ||Ax - b||^2.
inline double l1ls_kkt_residual(const Matrix& A, const Vector& b, double lambda, const Vector& x) {
  const Vector g = A.transpose() * (A * x - b);
  double r = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] != 0.0) r = std::max(r, std::abs(g[j] + lambda * (x[j] > 0.0 ? 1.0 : -1.0)));
    else r = std::max(r, std::abs(g[j]) - lambda);
  }
  return r;
}

/// Re-solve on the support with fixed signs; accepted only when it lowers the KKT residual.
inline Vector l1ls_support_polish(const Matrix& A, const Vector& b, double lambda, const Vector& x) {
  const IndexSet S = support_of(x, 0.0);
  if (S.empty()) return x;
  const Matrix As = select_columns(A, S);
  Vector s(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) s[i] = x[S[i]] > 0.0 ? 1.0 : -1.0;
  const Eigen::MatrixXd G = As.transpose() * As;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success) return x;
  const Vector xs = ldlt.solve(Eigen::VectorXd(As.transpose() * b - lambda * s));
  Vector out = Vector::Zero(x.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (xs[i] * s[i] <= 0.0) return x;
    out[S[i]] = xs[i];
  }
  return l1ls_kkt_residual(A, b, lambda, out) < l1ls_kkt_residual(A, b, lambda, x) ? out : x;
}

}  // namespace detail

/// ISTA, or FISTA when opts.accelerate. The reported objective is in the
/// ||x||_1 + ||Ax - b||^2 / (2 lambda) scaling.
inline Solution l1ls_proxgrad(const Matrix& A, const Vector& b, double lambda, SolverOptions opts = {},
                              std::vector<double>* trace = nullptr) {
  opts.validate();
  if (!(lambda > 0.0)) throw std::invalid_argument("l1ls_proxgrad: lambda must be positive");
  if (b.size() != A.rows()) throw std::invalid_argument("l1ls_proxgrad: dimension mismatch");
  const Eigen::Index n = A.cols();

  double gamma = std::visit(
      [&](const auto& r) -> double {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, steps::Fixed>) return r.gamma;
        else if constexpr (std::is_same_v<R, steps::Lipschitz>) return lipschitz_step(A);
        else return 1.0;
      },
      opts.step_rule);
  const bool backtrack = std::holds_alternative<steps::BacktrackingArmijo>(opts.step_rule);

  auto F = [&](const Vector& v) { return detail::l1ls_internal(A, b, lambda, v); };
  auto prox_step = [&](const Vector& y, double g) {
    return threshold(Vector(y - g * (A.transpose() * (A * y - b))), thresholds::Soft{lambda * g});
  };

  Vector x = Vector::Zero(n), y = x;
  double t = 1.0;
  int it = 0;
  bool converged = detail::l1ls_kkt_residual(A, b, lambda, x) <= opts.tol;
  if (trace) trace->push_back(F(x));
  for (; it < opts.max_iter && !converged; ++it) {
    Vector next = prox_step(y, gamma);
    if (backtrack) {
      // F(y) - F(next) from the step itself; differencing two F values loses it to roundoff.
      const Vector r = A * y - b;
      auto decrease = [&](const Vector& p) {
        const Vector Ad = A * (p - y);
        return lambda * (y.lpNorm<1>() - p.lpNorm<1>()) - r.dot(Ad) - 0.5 * Ad.squaredNorm();
      };
      // FISTA also needs the quadratic upper bound at y; the decrease test alone admits
      // steps near 2/L, where the extrapolation oscillates.
      auto accept = [&](const Vector& p) {
        const double d2 = (p - y).squaredNorm();
        if (opts.accelerate && (A * (p - y)).squaredNorm() > d2 / gamma) return false;
        return decrease(p) >= 1e-4 / gamma * d2;
      };
      while (!accept(next) && gamma > 1e-16) {
        gamma *= 0.5;
        next = prox_step(y, gamma);
      }
    }
    if (opts.accelerate) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - x);
      t = t_next;
    } else {
      y = next;
    }
    x = next;
    if (trace) trace->push_back(F(x));
    converged = detail::l1ls_kkt_residual(A, b, lambda, x) <= opts.tol;
  }
  // The polish only replaces x when it lowers the KKT residual.
  x = detail::l1ls_support_polish(A, b, lambda, x);
  converged = converged || detail::l1ls_kkt_residual(A, b, lambda, x) <= opts.tol;
  return make_solution(x, F(x) / lambda, converged ? SolveStatus::Optimal : SolveStatus::IterLimit, it);
}

// ---------------------------------------------------------------------------
// Homotopy

enum class PathEvent { Insert, Remove, End };

struct PathBreakpoint {
  double lambda = 0.0;
  Vector x;
  IndexSet support;
  std::vector<int> signs;
  PathEvent event = PathEvent::End;
  int index = -1;  // the inserted or removed coordinate
};

/// Piecewise-linear solution path of min lambda ||x||_1 + 1/2 ||Ax - b||^2 from
/// lambda_max = ||A^T b||_inf down to lambda_min. Simultaneous events resolve
/// removals first, then the lowest index.
inline std::vector<PathBreakpoint> homotopy_path(const Matrix& A, const Vector& b, double lambda_min = 0.0) {
  if (lambda_min < 0.0) throw std::invalid_argument("homotopy_path: negative lambda_min");
  if (b.size() != A.rows()) throw std::invalid_argument("homotopy_path: dimension mismatch");
  const int n = static_cast<int>(A.cols());
  const Vector c0 = A.transpose() * b;
  const double lambda_max = n > 0 ? c0.lpNorm<Eigen::Infinity>() : 0.0;
  std::vector<PathBreakpoint> path;
  if (lambda_max == 0.0) {
    path.push_back({0.0, Vector::Zero(n), {}, {}, PathEvent::End, -1});
    return path;
  }
  const double event_tol = 1e-10 * std::max(1.0, lambda_max);

  Vector x = Vector::Zero(n);
  IndexSet active;
  std::vector<int> sign_of(n, 0);
  double lambda = lambda_max;

  auto record = [&](PathEvent ev, int idx) {
    PathBreakpoint bp;
    bp.lambda = lambda;
    bp.x = x;
    bp.support = active;
    std::sort(bp.support.begin(), bp.support.end());
    for (int j : bp.support) bp.signs.push_back(sign_of[j]);
    bp.event = ev;
    bp.index = idx;
    path.push_back(std::move(bp));
  };

  // Entry at lambda_max: every index attaining the maximum, lowest first.
  for (int j = 0; j < n; ++j)
    if (std::abs(c0[j]) >= lambda_max - event_tol) {
      active.push_back(j);
      sign_of[j] = c0[j] > 0.0 ? 1 : -1;
      record(PathEvent::Insert, j);
    }

  int last_removed = -1;
  const int max_events = 50 * (n + static_cast<int>(A.rows())) + 100;
  for (int step = 0; step < max_events; ++step) {
    if (lambda <= lambda_min) break;
    const Vector corr = A.transpose() * (b - A * x);
    const int k = static_cast<int>(active.size());
    const Matrix As = select_columns(A, active);
    const Eigen::MatrixXd G = As.transpose() * As;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (lu.rank() < k) throw std::runtime_error("homotopy_path: singular active Gram matrix");
    Vector s(k);
    for (int i = 0; i < k; ++i) s[i] = sign_of[active[i]];
    const Vector d = lu.solve(Eigen::VectorXd(s));
    const Vector v = As * d;
    const Vector av = A.transpose() * v;

    // Step gamma lowers lambda to lambda - gamma.
    double best = lambda - lambda_min;
    PathEvent ev = PathEvent::End;
    int who = -1;
    auto consider = [&](double g, PathEvent e, int j) {
      if (g <= event_tol) g = 0.0;
      const bool tie = std::abs(g - best) <= event_tol;
      bool take = g < best - event_tol;
      if (!take && tie) {
        // End wins ties (events at lambda_min are not recorded); otherwise removal
        // beats insertion and among the same kind the lowest index wins.
        if (ev == PathEvent::End || e == PathEvent::End) take = false;
        else if (e == PathEvent::Remove && ev == PathEvent::Insert) take = true;
        else if (e == ev && j < who) take = true;
      }
      if (take) {
        best = std::min(best, std::max(g, 0.0));
        ev = e;
        who = j;
      }
    };
    for (int i = 0; i < k; ++i) {
      const int j = active[i];
      if (d[i] != 0.0) {
        const double g = -x[j] / d[i];
        if (g > event_tol) consider(g, PathEvent::Remove, j);
      }
    }
    std::vector<bool> is_active(n, false);
    for (int j : active) is_active[j] = true;
    // A full-rank active set already fits b exactly at lambda = 0.
    const bool saturated = k >= A.rows();
    for (int j = 0; j < n && !saturated; ++j) {
      if (is_active[j]) continue;
      // A just-removed coordinate sits on the boundary; only a later crossing counts.
      const double floor = j == last_removed ? event_tol : -event_tol;
      // corr_j - g av_j = +-(lambda - g)
      if (1.0 - av[j] > 1e-14) {
        const double g = (lambda - corr[j]) / (1.0 - av[j]);
        if (g > floor) consider(std::max(g, 0.0), PathEvent::Insert, j);
      }
      if (1.0 + av[j] > 1e-14) {
        const double g = (lambda + corr[j]) / (1.0 + av[j]);
        if (g > floor) consider(std::max(g, 0.0), PathEvent::Insert, j);
      }
    }

    for (int i = 0; i < k; ++i) x[active[i]] += best * d[i];
    lambda -= best;
    if (ev == PathEvent::End) {
      lambda = lambda_min;
      record(PathEvent::End, -1);
      return path;
    }
    if (ev == PathEvent::Remove) {
      x[who] = 0.0;
      active.erase(std::find(active.begin(), active.end(), who));
      sign_of[who] = 0;
    } else {
      const double cj = (A.col(who).transpose() * (b - A * x)).value();
      active.push_back(who);
      sign_of[who] = cj > 0.0 ? 1 : -1;
    }
    record(ev, who);
    last_removed = ev == PathEvent::Remove ? who : -1;
  }
  if (path.back().event != PathEvent::End) {
    record(PathEvent::End, -1);
  }
  return path;
}

/// Linear interpolation of the path at lambda (0 above the first breakpoint).
inline Vector path_at(const std::vector<PathBreakpoint>& path, double lambda) {
  if (path.empty()) throw std::invalid_argument("path_at: empty path");
  if (lambda >= path.front().lambda) return Vector::Zero(path.front().x.size());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto& hi = path[i];
    const auto& lo = path[i + 1];
    if (lambda <= hi.lambda && lambda >= lo.lambda) {
      const double span = hi.lambda - lo.lambda;
      if (span <= 0.0) return lo.x;
      const double w = (hi.lambda - lambda) / span;
      return (1.0 - w) * hi.x + w * lo.x;
    }
  }
  return path.back().x;
}

inline int insertion_count(const std::vector<PathBreakpoint>& path) {
  return static_cast<int>(std::count_if(path.begin(), path.end(), [](const auto& p) { return p.event == PathEvent::Insert; }));
}

// ---------------------------------------------------------------------------
// LASSO

/// min 1/2 ||Ax - b||^2 s.t. ||x||_1 <= tau by spectral projected gradient with
/// a Barzilai-Borwein step and a nonmonotone (last 10 values) line search.
inline Solution lasso_spg(const Matrix& A, const Vector& b, double tau, SolverOptions opts = {}) {
  opts.validate();
  if (tau < 0.0) throw std::invalid_argument("lasso_spg: tau must be nonnegative");
  if (b.size() != A.rows()) throw std::invalid_argument("lasso_spg: dimension mismatch");
  const Eigen::Index n = A.cols();
  auto f = [&](const Vector& v) { return 0.5 * (A * v - b).squaredNorm(); };
  auto grad = [&](const Vector& v) -> Vector { return A.transpose() * (A * v - b); };
  auto stationarity = [&](const Vector& v, const Vector& g) {
    return (v - project_l1_ball(v - g, tau)).lpNorm<Eigen::Infinity>();
  };

  Vector x = project_l1_ball(Vector::Zero(n), tau);
  Vector g = grad(x);
  double alpha = lipschitz_step(A);
  std::deque<double> recent{f(x)};
  int it = 0;
  bool converged = n == 0 || stationarity(x, g) <= opts.tol;
  for (; it < opts.max_iter && !converged; ++it) {
    const Vector d = project_l1_ball(x - alpha * g, tau) - x;
    const double slope = g.dot(d);
    const double ref = *std::max_element(recent.begin(), recent.end());
    double step = 1.0;
    Vector trial = x + d;
    double ft = f(trial);
    while (ft > ref + 1e-4 * step * slope && step > 1e-12) {
      // Safeguarded quadratic interpolation.
      const double fx = recent.back();
      double next = -0.5 * slope * step * step / (ft - fx - step * slope);
      if (!(next > 0.1 * step && next < 0.9 * step)) next = 0.5 * step;
      step = next;
      trial = x + step * d;
      ft = f(trial);
    }
    const Vector g_new = grad(trial);
    const Vector s = trial - x, yv = g_new - g;
    const double sy = s.dot(yv);
    alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : 1e10;
    x = trial;
    g = g_new;
    recent.push_back(ft);
    if (recent.size() > 10) recent.pop_front();
    converged = stationarity(x, g) <= opts.tol;
  }
  return make_solution(x, f(x), converged ? SolveStatus::Optimal : SolveStatus::IterLimit, it);
}

// ---------------------------------------------------------------------------
// Parameter correspondence

struct ParamEquivalence {
  double tau = 0.0;    // LASSO radius
  double delta = 0.0;  // BPDN residual level
  Vector x;
};

/// Solves l1-LS(lambda) to 1e-8; x then solves LASSO(tau) and BPDN(delta).
inline ParamEquivalence param_equivalence(const Matrix& A, const Vector& b, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("param_equivalence: lambda must be positive");
  SolverOptions o;
  o.tol = 1e-8;
  o.accelerate = true;
  o.max_iter = 200000;
  const Solution s = l1ls_proxgrad(A, b, lambda, o);
  if (s.status != SolveStatus::Optimal) throw std::runtime_error("param_equivalence: inner solver did not converge");
  return {s.x.lpNorm<1>(), (A * s.x - b).norm(), s.x};
}

}  // namespace cardopt
