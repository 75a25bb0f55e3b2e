#pragma once

// Heuristics that work on the cardinality directly: orthogonal matching
// pursuit, CoSaMP, iterative hard thresholding, alternating projections and
// smoothed l0 (SL0).

#include "cardopt/core.hpp"
#include "cardopt/surrogate.hpp"

#include <Eigen/Cholesky>

#include <optional>
#include <variant>

namespace cardopt {

struct GreedyStep {
  IndexSet support;
  double residual = 0.0;  // ||Ax - b||_2 of the iterate
  double objective = 0.0;
};

struct GreedyTrace {
  std::vector<GreedyStep> steps;
};

using HeuristicResult = std::pair<Solution, GreedyTrace>;

namespace detail {

inline void record_step(GreedyTrace& trace, const Matrix& A, const Vector& b, const Vector& x, double objective) {
  trace.steps.push_back({support_of(x), (A * x - b).norm(), objective});
}

/// Projection onto {x : Ax = b} for A of full row rank.
class AffineProjector {
 public:
  AffineProjector(const Matrix& A, const Vector& b) : A_(A), b_(b), gram_(Eigen::MatrixXd(A * A.transpose())) {
    if (matrix_rank(A) != A.rows()) throw std::invalid_argument("affine projection: A must have full row rank");
  }
  Vector operator()(const Vector& x) const { return x - A_.transpose() * gram_.solve(Eigen::VectorXd(A_ * x - b_)); }

 private:
  const Matrix& A_;
  const Vector& b_;
  Eigen::LLT<Eigen::MatrixXd> gram_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// OMP

namespace omp_stop {
struct MaxCard {
  int k = 0;
};
struct Residual {
  double delta = 0.0;
};
}  // namespace omp_stop

using OmpStop = std::variant<omp_stop::MaxCard, omp_stop::Residual>;

/// Adds the column most correlated with the residual (normalized by its norm;
/// ties to the lowest index) and refits all coefficients on the support.
/// Objective: squared residual under MaxCard, cardinality under Residual.
inline HeuristicResult omp(const Matrix& A, const Vector& b, const OmpStop& stop) {
  const int n = static_cast<int>(A.cols());
  if (b.size() != A.rows()) throw std::invalid_argument("omp: dimension mismatch");
  Vector norms(n);
  for (int j = 0; j < n; ++j) {
    norms[j] = A.col(j).norm();
    if (norms[j] == 0.0) throw std::invalid_argument("omp: zero column");
  }
  const auto* card = std::get_if<omp_stop::MaxCard>(&stop);
  const auto* res = std::get_if<omp_stop::Residual>(&stop);
  if (card && (card->k < 0 || card->k > n)) throw std::invalid_argument("omp: k out of range");
  if (res && res->delta < 0.0) throw std::invalid_argument("omp: negative delta");

  auto objective = [&](const Vector& x, double r) {
    return card ? r * r : static_cast<double>(cardinality(x));
  };
  IndexSet S;
  Vector x = Vector::Zero(n);
  double r = b.norm();
  GreedyTrace trace;
  detail::record_step(trace, A, b, x, objective(x, r));
  int it = 0;
  while (true) {
    if (card && static_cast<int>(S.size()) >= card->k) break;
    if (res && r <= res->delta + residual_tolerance(b)) break;
    if (static_cast<int>(S.size()) == n) break;
    const Vector corr = A.transpose() * (b - A * x);
    std::vector<bool> in(n, false);
    for (int j : S) in[j] = true;
    int pick = -1;
    double best = 0.0;
    for (int j = 0; j < n; ++j) {
      if (in[j]) continue;
      const double c = std::abs(corr[j]) / norms[j];
      if (c > best) {
        best = c;
        pick = j;
      }
    }
    if (pick < 0 || best <= 1e-14 * std::max(1.0, b.norm())) break;  // stall
    IndexSet trial = S;
    trial.insert(std::upper_bound(trial.begin(), trial.end(), pick), pick);
    const LeastSquares ls = least_squares(A, b, trial);
    if (!(ls.residual < r)) break;  // stall: no reduction
    S = std::move(trial);
    x = ls.x;
    r = ls.residual;
    ++it;
    detail::record_step(trace, A, b, x, objective(x, r));
  }
  return {make_solution(x, objective(x, r), SolveStatus::Feasible, it), std::move(trace)};
}

// ---------------------------------------------------------------------------
// CoSaMP

/// Merges the top-2k proxy entries with the current support, fits by ridge
/// (1e-12) normal equations and keeps the k largest coefficients. Stops when
/// the residual changes by less than 1e-10 relatively or falls below opts.tol.
/// Objective: squared residual.
inline HeuristicResult cosamp(const Matrix& A, const Vector& b, int k, SolverOptions opts = {}) {
  opts.validate();
  const int n = static_cast<int>(A.cols());
  if (b.size() != A.rows()) throw std::invalid_argument("cosamp: dimension mismatch");
  if (k < 0 || k > n) throw std::invalid_argument("cosamp: k out of range");
  Vector x = Vector::Zero(n);
  double r = b.norm();
  GreedyTrace trace;
  detail::record_step(trace, A, b, x, r * r);
  if (k == 0 || r <= opts.tol) return {make_solution(x, r * r, SolveStatus::Feasible, 0), std::move(trace)};

  int it = 0;
  bool converged = false;
  for (; it < opts.max_iter && !converged; ++it) {
    const Vector proxy = A.transpose() * (b - A * x);
    IndexSet merged = top_k_indices(proxy, std::min(2 * k, n));
    for (int j : support_of(x, 0.0)) merged.push_back(j);
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    const Matrix As = select_columns(A, merged);
    Eigen::MatrixXd G = As.transpose() * As;
    G.diagonal().array() += 1e-12;
    const Vector coef = G.ldlt().solve(Eigen::VectorXd(As.transpose() * b));
    Vector full = Vector::Zero(n);
    for (std::size_t i = 0; i < merged.size(); ++i) full[merged[i]] = coef[i];
    x = threshold(full, thresholds::TopK{k});

    const double r_new = (A * x - b).norm();
    converged = r_new <= opts.tol || std::abs(r - r_new) < 1e-10 * std::max(r, 1e-300);
    r = r_new;
    detail::record_step(trace, A, b, x, r * r);
  }
  return {make_solution(x, r * r, converged ? SolveStatus::Feasible : SolveStatus::IterLimit, it), std::move(trace)};
}

// ---------------------------------------------------------------------------
// IHT

namespace iht_modes {
/// min ||x||_0 + ||Ax - b||^2 / lambda, i.e. 1/2 ||Ax - b||^2 + lambda/2 ||x||_0
struct Reg {
  double lambda = 1.0;
};
/// min ||Ax - b||^2 s.t. ||x||_0 <= k
struct Cons {
  int k = 0;
};
}  // namespace iht_modes

using IhtMode = std::variant<iht_modes::Reg, iht_modes::Cons>;

struct IhtOptions {
  int max_iter = 10000;
  double tol = 1e-10;
  std::optional<double> step;  // default 0.99 / ||A^T A||_2
  std::optional<Vector> x0;
};

inline double iht_default_step(const Matrix& A) {
  const double L = power_iteration_norm_sq(A, 500);
  return L > 0.0 ? 0.99 / L : 1.0;
}

/// x <- H(x + step A^T (b - Ax)) with H the hard threshold at sqrt(step lambda)
/// (Reg) or the keep-k-largest operator (Cons).
inline HeuristicResult iht(const Matrix& A, const Vector& b, const IhtMode& mode, const IhtOptions& opts = {}) {
  const int n = static_cast<int>(A.cols());
  if (b.size() != A.rows()) throw std::invalid_argument("iht: dimension mismatch");
  if (!(opts.tol > 0.0) || opts.max_iter < 0) throw std::invalid_argument("iht: bad options");
  const auto* reg = std::get_if<iht_modes::Reg>(&mode);
  const auto* cons = std::get_if<iht_modes::Cons>(&mode);
  if (reg && !(reg->lambda > 0.0)) throw std::invalid_argument("iht: lambda must be positive");
  if (cons && (cons->k < 0 || cons->k > n)) throw std::invalid_argument("iht: k out of range");
  const double step = opts.step ? *opts.step : iht_default_step(A);
  if (!(step > 0.0)) throw std::invalid_argument("iht: step must be positive");

  auto objective = [&](const Vector& x) {
    const double r2 = (A * x - b).squaredNorm();
    return reg ? cardinality(x) + r2 / reg->lambda : r2;
  };
  auto H = [&](const Vector& v) {
    return reg ? threshold(v, thresholds::Hard{std::sqrt(step * reg->lambda)}) : threshold(v, thresholds::TopK{cons->k});
  };

  Vector x = opts.x0 ? *opts.x0 : Vector::Zero(n);
  if (x.size() != n) throw std::invalid_argument("iht: x0 length mismatch");
  if (cons) x = threshold(x, thresholds::TopK{cons->k});
  const double initial = objective(x);
  GreedyTrace trace;
  detail::record_step(trace, A, b, x, initial);
  int it = 0;
  bool converged = false;
  for (; it < opts.max_iter; ++it) {
    const Vector next = H(x + step * (A.transpose() * (b - A * x)));
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    const double f = objective(x);
    detail::record_step(trace, A, b, x, f);
    if (f > 10.0 * initial && f > 1e-12)
      throw std::runtime_error("iht: objective grew tenfold above its initial value; reduce the step");
    if (change <= opts.tol) {
      converged = true;
      ++it;
      break;
    }
  }
  return {make_solution(x, objective(x), converged ? SolveStatus::Feasible : SolveStatus::IterLimit, it),
          std::move(trace)};
}

// ---------------------------------------------------------------------------
// Alternating projections

struct AltProjOptions {
  int max_iter = 1000;
  double tol = 1e-8;
  std::optional<Vector> x0;
};

/// Alternates the exact projection onto {Ax = b} with keep-k-largest; the last
/// step is always the sparse projection. Optimal status means ||Ax - b|| <= tol
/// was reached; Feasible means the iterates stalled. Objective: ||Ax - b||_2.
inline Solution altproj(const Matrix& A, const Vector& b, int k, const AltProjOptions& opts = {}) {
  const int n = static_cast<int>(A.cols());
  if (b.size() != A.rows()) throw std::invalid_argument("altproj: dimension mismatch");
  if (k < 0 || k > n) throw std::invalid_argument("altproj: k out of range");
  const detail::AffineProjector project(A, b);
  Vector z = threshold(opts.x0 ? *opts.x0 : Vector::Zero(n), thresholds::TopK{k});
  double r = (A * z - b).norm();
  int it = 0;
  SolveStatus status = SolveStatus::IterLimit;
  if (r <= opts.tol) status = SolveStatus::Optimal;
  for (; it < opts.max_iter && status == SolveStatus::IterLimit; ++it) {
    const Vector next = threshold(project(z), thresholds::TopK{k});
    const double change = (next - z).lpNorm<Eigen::Infinity>();
    z = next;
    r = (A * z - b).norm();
    if (r <= opts.tol) status = SolveStatus::Optimal;
    else if (change <= 1e-14 * std::max(1.0, z.lpNorm<Eigen::Infinity>())) status = SolveStatus::Feasible;
  }
  return make_solution(z, r, status, it);
}

// ---------------------------------------------------------------------------
// SL0

/// n - sum_i exp(-x_i^2 / (2 sigma^2)); tends to ||x||_0 as sigma -> 0.
inline double sl0_surrogate(const Vector& x, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sl0_surrogate: sigma must be positive");
  return static_cast<double>(x.size()) - (-x.array().square() / (2.0 * sigma * sigma)).exp().sum();
}

/// Geometric schedule (ratio 0.7) from 2 ||x_ls||_inf down to 1e-4, where
/// x_ls is the minimum-norm solution.
inline std::vector<double> sl0_default_schedule(const Matrix& A, const Vector& b) {
  const detail::AffineProjector project(A, b);
  const double top = 2.0 * project(Vector::Zero(A.cols())).lpNorm<Eigen::Infinity>();
  std::vector<double> out;
  for (double s = top; s > 1e-4; s *= 0.7) out.push_back(s);
  out.push_back(1e-4);
  return out;
}

/// Gradient steps on the Gaussian smoothing of ||x||_0, each followed by the
/// projection back onto {Ax = b}. The result is refitted on its support when
/// that stays feasible; the objective is n - F_sigma(x) at the last sigma.
inline Solution sl0(const Matrix& A, const Vector& b, const std::vector<double>& sigma_schedule, int inner_iters = 3) {
  const int n = static_cast<int>(A.cols());
  if (b.size() != A.rows()) throw std::invalid_argument("sl0: dimension mismatch");
  if (sigma_schedule.empty() || inner_iters < 1) throw std::invalid_argument("sl0: empty schedule");
  for (std::size_t i = 0; i < sigma_schedule.size(); ++i) {
    if (!(sigma_schedule[i] > 0.0)) throw std::invalid_argument("sl0: sigma must be positive");
    if (i > 0 && !(sigma_schedule[i] < sigma_schedule[i - 1]))
      throw std::invalid_argument("sl0: schedule must be strictly decreasing");
  }
  const detail::AffineProjector project(A, b);
  Vector x = project(Vector::Zero(n));
  int it = 0;
  for (double sigma : sigma_schedule) {
    for (int l = 0; l < inner_iters; ++l, ++it) {
      // Step 2 sigma^2 on F_sigma; the gradient is -x exp(-x^2 / 2 sigma^2) / sigma^2.
      const Vector shrink = x.array() * (-x.array().square() / (2.0 * sigma * sigma)).exp();
      x = project(Vector(x - 2.0 * shrink));
    }
  }
  const double sigma_final = sigma_schedule.back();
  const LeastSquares refit = least_squares(A, b, support_of(x, sigma_final));
  if (refit.residual <= 1e-8) x = refit.x;
  if ((A * x - b).norm() > 1e-8) x = project(x);
  return make_solution(x, sl0_surrogate(x, sigma_final), SolveStatus::Feasible, it);
}

inline Solution sl0(const Matrix& A, const Vector& b) { return sl0(A, b, sl0_default_schedule(A, b), 3); }

}  // namespace cardopt
