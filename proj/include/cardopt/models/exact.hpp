#pragma once

// Exact solvers for the three problem classes.

#include "cardopt/models/covering.hpp"
#include "cardopt/models/milp.hpp"
#include "cardopt/models/support_bnb.hpp"

namespace cardopt {

namespace methods {
struct Covering {};
struct SupportBnB {};
struct BigM {
  BigMSpec M = 1000.0;
};
}  // namespace methods

using ExactMethod = std::variant<methods::Covering, methods::SupportBnB, methods::BigM>;

namespace detail {

/// Re-express the winning point in the instance's objective convention.
inline SolveReport finish_report(const ProblemInstance& inst, SolveReport r) {
  if (r.has_incumbent) {
    const SolveStatus st = r.solution.status;
    const int iters = r.solution.iterations;
    r.solution = make_solution(inst, r.solution.x, st, iters);
  }
  return r;
}

}  // namespace detail

/// Big-M model whose integral points are re-fitted on their support before
/// they are accepted as incumbents.
inline SolveReport solve_bigm(const ProblemInstance& inst, const BigMSpec& M, const BnbConfig& config = {}) {
  MilpModel model = build_bigm_cardmin(inst, M);
  const int n = inst.cols();
  auto polish = [&inst, n](const Vector& lp_x) -> std::optional<Candidate> {
    IndexSet S;
    for (int j = 0; j < n; ++j)
      if (lp_x[n + j] > 0.5) S.push_back(j);
    auto point = cardmin_support_point(inst, S);
    if (!point) return std::nullopt;
    return Candidate{*point, static_cast<double>(cardinality(*point))};
  };
  MilpAdapter<true> adapter(std::move(model), polish);
  return detail::finish_report(inst, run(adapter, config));
}

inline SolveReport solve_exact(const ProblemInstance& inst, const ExactMethod& method, const BnbConfig& config = {}) {
  inst.validate();
  return std::visit(
      [&](const auto& meth) -> SolveReport {
        using M = std::decay_t<decltype(meth)>;
        if constexpr (std::is_same_v<M, methods::Covering>) {
          CoveringAdapter adapter(inst);
          return detail::finish_report(inst, run(adapter, config));
        } else if constexpr (std::is_same_v<M, methods::BigM>) {
          return solve_bigm(inst, meth.M, config);
        } else {
          if (std::holds_alternative<CardMin>(inst.kind)) {
            SupportBnbAdapter<true> adapter(inst);
            return detail::finish_report(inst, run(adapter, config));
          }
          SupportBnbAdapter<false> adapter(inst);
          return detail::finish_report(inst, run(adapter, config));
        }
      },
      method);
}

}  // namespace cardopt
