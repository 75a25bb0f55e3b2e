#pragma once

// Branching on support membership with least-squares node relaxations.
// A node fixes S_in (forced nonzero) and S_out (forced zero); its relaxation is
// the unconstrained least-squares fit over the allowed columns [n] \ S_out.

#include "cardopt/bnb.hpp"
#include "cardopt/models/restricted.hpp"

#include <algorithm>

namespace cardopt {

template <bool IntegralObjective>
class SupportBnbAdapter {
 public:
  static constexpr bool kIntegralObjective = IntegralObjective;
  static constexpr bool kExactBounds = true;

  struct State {
    std::vector<signed char> mark;  // -1 undecided, 1 in, 0 out
  };
  struct Eval {
    double bound = 0.0;
    bool infeasible = false;
    bool leaf = false;
    Vector relaxed;  // least squares over allowed columns
  };

  explicit SupportBnbAdapter(const ProblemInstance& inst) : inst_(inst) {
    inst_.validate();
    if (const auto* cm = std::get_if<CardMin>(&inst_.kind)) {
      if (cm->delta > 0.0 && cm->residual_norm != ResidualNorm::L2)
        throw std::invalid_argument("support bnb: CardMin requires the L2 residual");
    }
  }

  State root() const { return State{std::vector<signed char>(inst_.cols(), -1)}; }

  Eval evaluate(const State& s) const {
    const IndexSet in = members(s, 1), allowed = allowed_of(s);
    const int undecided = count(s, -1);
    Eval e;
    const LeastSquares relax = least_squares(inst_.A, inst_.b, allowed);
    e.relaxed = relax.x;
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, CardCons>) {
            if (static_cast<int>(in.size()) > k.k) {
              e.infeasible = true;
            } else if (static_cast<int>(in.size()) == k.k) {
              e.bound = sq(least_squares(inst_.A, inst_.b, in).residual);
              e.leaf = true;
            } else {
              e.bound = sq(relax.residual);
              e.leaf = undecided == 0 || static_cast<int>(allowed.size()) <= k.k;
            }
          } else if constexpr (std::is_same_v<K, CardMin>) {
            if (!within_delta(relax.residual, k.delta, inst_.b)) {
              e.infeasible = true;
              return;
            }
            const bool in_ok = within_delta(least_squares(inst_.A, inst_.b, in).residual, k.delta, inst_.b);
            e.bound = static_cast<double>(in.size()) + (in_ok ? 0.0 : 1.0);
            e.leaf = in_ok || undecided == 0;
          } else {
            e.bound = static_cast<double>(in.size()) + sq(relax.residual) / k.lambda;
            e.leaf = undecided == 0;
          }
        },
        inst_.kind);
    return e;
  }

  std::vector<State> branch(const State& s, const Eval& e) const {
    if (e.leaf) return {};
    int pick = -1;
    double best = -1.0;
    for (int j = 0; j < inst_.cols(); ++j)
      if (s.mark[j] < 0 && std::abs(e.relaxed[j]) > best) {
        best = std::abs(e.relaxed[j]);
        pick = j;
      }
    if (pick < 0) return {};
    State in = s, out = s;
    in.mark[pick] = 1;
    out.mark[pick] = 0;
    return {in, out};
  }

  std::optional<Candidate> incumbent(const State& s, const Eval& e) const {
    IndexSet base = members(s, 1);
    IndexSet order;
    for (int j = 0; j < inst_.cols(); ++j)
      if (s.mark[j] < 0) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(e.relaxed[a]) > std::abs(e.relaxed[b]); });

    std::optional<Candidate> best;
    auto consider = [&](const IndexSet& S) {
      IndexSet sorted = S;
      std::sort(sorted.begin(), sorted.end());
      const LeastSquares ls = least_squares(inst_.A, inst_.b, sorted);
      if (!is_feasible(inst_, ls.x)) return false;
      const double obj = objective_value(inst_, ls.x);
      if (!best || obj < best->objective) best = Candidate{ls.x, obj};
      return true;
    };

    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          IndexSet S = base;
          if constexpr (std::is_same_v<K, CardCons>) {
            for (int j : order) {
              if (static_cast<int>(S.size()) >= k.k) break;
              S.push_back(j);
            }
            if (static_cast<int>(S.size()) <= k.k) consider(S);
          } else if constexpr (std::is_same_v<K, CardMin>) {
            if (consider(S)) return;
            for (int j : order) {
              S.push_back(j);
              if (consider(S)) return;
            }
          } else {
            consider(S);
            for (int j : order) {
              S.push_back(j);
              consider(S);
            }
          }
        },
        inst_.kind);
    return best;
  }

 private:
  static double sq(double v) { return v * v; }

  IndexSet members(const State& s, int flag) const {
    IndexSet out;
    for (int j = 0; j < inst_.cols(); ++j)
      if (s.mark[j] == flag) out.push_back(j);
    return out;
  }

  IndexSet allowed_of(const State& s) const {
    IndexSet out;
    for (int j = 0; j < inst_.cols(); ++j)
      if (s.mark[j] != 0) out.push_back(j);
    return out;
  }

  static int count(const State& s, int flag) {
    return static_cast<int>(std::count(s.mark.begin(), s.mark.end(), flag));
  }

  ProblemInstance inst_;
};

}  // namespace cardopt
