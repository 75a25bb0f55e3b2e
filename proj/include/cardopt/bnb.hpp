#pragma once

// Generic branch-and-bound over an adapter that supplies states, bounds,
// branching and incumbent candidates.
//
// Adapter contract (duck-typed, checked by the BranchingProblem concept):
//   using State = ...;  using Eval = ...;   Eval has `double bound`, `bool infeasible`
//   State root();
//   Eval evaluate(const State&);
//   std::vector<State> branch(const State&, const Eval&);   empty => leaf
//   std::optional<Candidate> incumbent(const State&, const Eval&);
// Optional members:
//   bool separate(const State&, const Eval&);   true => a cut was added
//   void set_deadline(Clock::time_point);
//   static constexpr bool kIntegralObjective;   bounds rounded up before pruning
//   static constexpr bool kExactBounds;         child < parent - 1e-7 is an error

#include "cardopt/core.hpp"

#include <chrono>
#include <concepts>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

namespace cardopt {

using Clock = std::chrono::steady_clock;

enum class NodeOrder { BestBound, DepthFirst };

enum class BnbStatus { Optimal, GapLimit, NodeLimit, TimeLimit, Infeasible };

inline const char* to_string(BnbStatus s) {
  switch (s) {
    case BnbStatus::Optimal: return "Optimal";
    case BnbStatus::GapLimit: return "GapLimit";
    case BnbStatus::NodeLimit: return "NodeLimit";
    case BnbStatus::TimeLimit: return "TimeLimit";
    case BnbStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

struct BnbProgress {
  long nodes = 0;
  double lower_bound = -kInf;
  double upper_bound = kInf;
};

struct BnbConfig {
  long max_nodes = 1000000;
  double time_limit_s = kInf;
  double gap_tol = 0.0;
  NodeOrder node_order = NodeOrder::BestBound;
  std::function<void(const BnbProgress&)> on_progress;

  void validate() const {
    if (gap_tol < 0.0) throw std::invalid_argument("bnb: negative gap tolerance");
    if (max_nodes < 0) throw std::invalid_argument("bnb: negative node limit");
  }
};

struct SolveReport {
  Solution solution;
  bool has_incumbent = false;
  double lower_bound = -kInf;
  double gap = kInf;
  long nodes_processed = 0;
  long cuts_added = 0;
  BnbStatus status = BnbStatus::Infeasible;
};

struct Candidate {
  Vector x;
  double objective = 0.0;
};

/// (ub - lb) / max(|ub|, 1e-10); infinite without an incumbent.
inline double relative_gap(double ub, double lb) {
  if (!std::isfinite(ub)) return kInf;
  return std::max(0.0, ub - lb) / std::max(std::abs(ub), 1e-10);
}

template <class A>
concept BranchingProblem = requires(A& a, const typename A::State& s, const typename A::Eval& e) {
  { a.root() } -> std::convertible_to<typename A::State>;
  { a.evaluate(s) } -> std::convertible_to<typename A::Eval>;
  { a.branch(s, e) } -> std::convertible_to<std::vector<typename A::State>>;
  { a.incumbent(s, e) } -> std::convertible_to<std::optional<Candidate>>;
  { e.bound } -> std::convertible_to<double>;
  { e.infeasible } -> std::convertible_to<bool>;
};

namespace detail {

template <class A>
constexpr bool integral_objective() {
  if constexpr (requires { A::kIntegralObjective; }) return A::kIntegralObjective;
  return false;
}

template <class A>
constexpr bool exact_bounds() {
  if constexpr (requires { A::kExactBounds; }) return A::kExactBounds;
  return false;
}

}  // namespace detail

inline constexpr int kMaxSeparationRounds = 20;
inline constexpr double kPruneTol = 1e-9;
/// Largest relative gap left by inexact leaves that still counts as Optimal.
inline constexpr double kLeafGapTol = 1e-6;

template <BranchingProblem A>
SolveReport run(A& adapter, const BnbConfig& config = {}) {
  using State = typename A::State;
  using Eval = typename A::Eval;
  config.validate();

  const auto start = Clock::now();
  const auto deadline = std::isfinite(config.time_limit_s)
                            ? start + std::chrono::duration_cast<Clock::duration>(
                                          std::chrono::duration<double>(config.time_limit_s))
                            : Clock::time_point::max();
  if constexpr (requires { adapter.set_deadline(deadline); }) adapter.set_deadline(deadline);

  SolveReport report;
  double ub = kInf;
  std::optional<Candidate> best;

  struct Node {
    State state;
    Eval eval;
    double bound;
  };
  std::vector<std::optional<Node>> storage;
  // Best-bound order: lowest bound first, then the most recently created node.
  std::set<std::pair<double, long>> open;
  std::vector<long> stack;

  auto round_bound = [](double b) {
    if constexpr (detail::integral_objective<A>()) return std::ceil(b - 1e-7);
    return b;
  };

  auto evaluate = [&](const State& s) {
    Eval e = adapter.evaluate(s);
    if constexpr (requires { adapter.separate(s, e); }) {
      for (int round = 0; round < kMaxSeparationRounds && !e.infeasible; ++round) {
        if (!adapter.separate(s, e)) break;
        ++report.cuts_added;
        e = adapter.evaluate(s);
      }
    }
    return e;
  };

  auto offer = [&](const State& s, const Eval& e) {
    auto cand = adapter.incumbent(s, e);
    if (cand && cand->objective < ub) {
      ub = cand->objective;
      best = std::move(cand);
    }
  };

  auto push = [&](State s, Eval e, double bound) {
    const long id = static_cast<long>(storage.size());
    storage.push_back(Node{std::move(s), std::move(e), bound});
    if (config.node_order == NodeOrder::BestBound) open.insert({bound, -id});
    else stack.push_back(id);
  };

  auto open_count = [&] {
    return config.node_order == NodeOrder::BestBound ? open.size() : stack.size();
  };

  auto open_min_bound = [&] {
    double lb = kInf;
    if (config.node_order == NodeOrder::BestBound) {
      if (!open.empty()) lb = open.begin()->first;
    } else {
      for (long id : stack) lb = std::min(lb, storage[id]->bound);
    }
    return lb;
  };

  // Smallest bound among nodes closed without children that did not reach the
  // incumbent (inexact leaf solves); it caps every later lower bound.
  double closed_lb = kInf;
  double global_lb = -kInf;
  auto refresh_lb = [&] {
    const double candidate = std::min({open_min_bound(), ub, closed_lb});
    global_lb = std::max(global_lb, candidate);
  };

  {
    State root = adapter.root();
    Eval e = evaluate(root);
    if (!e.infeasible) {
      offer(root, e);
      const double bound = round_bound(e.bound);
      push(std::move(root), std::move(e), bound);
      global_lb = bound;
    }
  }

  BnbStatus status = BnbStatus::Optimal;
  while (true) {
    refresh_lb();
    if (config.on_progress) config.on_progress({report.nodes_processed, global_lb, ub});
    if (open_count() == 0) {
      status = best ? BnbStatus::Optimal : BnbStatus::Infeasible;
      break;
    }
    if (best && open_min_bound() >= ub - kPruneTol) {
      // The root was evaluated and closed by its own incumbent.
      report.nodes_processed = std::max(report.nodes_processed, 1L);
      status = BnbStatus::Optimal;
      break;
    }
    if (best && config.gap_tol > 0.0 && relative_gap(ub, global_lb) <= config.gap_tol) {
      status = BnbStatus::GapLimit;
      break;
    }
    if (report.nodes_processed >= config.max_nodes) {
      status = BnbStatus::NodeLimit;
      break;
    }
    if (Clock::now() >= deadline) {
      status = BnbStatus::TimeLimit;
      break;
    }

    long id;
    if (config.node_order == NodeOrder::BestBound) {
      id = -open.begin()->second;
      open.erase(open.begin());
    } else {
      id = stack.back();
      stack.pop_back();
    }
    Node node = std::move(*storage[id]);
    storage[id].reset();
    ++report.nodes_processed;
    if (node.bound >= ub - kPruneTol) continue;

    std::vector<State> children = adapter.branch(node.state, node.eval);
    if (children.empty() && node.bound < ub) closed_lb = std::min(closed_lb, node.bound);
    std::vector<std::pair<State, std::pair<Eval, double>>> kept;
    for (auto& child : children) {
      Eval e = evaluate(child);
      if (e.infeasible) continue;
      if constexpr (detail::exact_bounds<A>()) {
        if (e.bound < node.eval.bound - 1e-7 * std::max(1.0, std::abs(node.eval.bound)))
          throw std::runtime_error("bnb: child bound " + std::to_string(e.bound) +
                                   " below parent bound " + std::to_string(node.eval.bound));
      }
      offer(child, e);
      const double bound = std::max(node.bound, round_bound(e.bound));
      if (bound >= ub - kPruneTol) continue;
      kept.push_back({std::move(child), {std::move(e), bound}});
    }
    // Depth-first explores the first child next.
    if (config.node_order == NodeOrder::DepthFirst) std::reverse(kept.begin(), kept.end());
    for (auto& [s, eb] : kept) push(std::move(s), std::move(eb.first), eb.second);
  }

  if (status == BnbStatus::Optimal || status == BnbStatus::Infeasible) {
    global_lb = best ? std::min(ub, closed_lb) : kInf;
    if (best && relative_gap(ub, global_lb) > kLeafGapTol) status = BnbStatus::GapLimit;
  } else {
    refresh_lb();
  }

  report.status = status;
  report.has_incumbent = best.has_value();
  report.lower_bound = global_lb;
  report.gap = best ? relative_gap(ub, global_lb) : kInf;
  if (best) {
    report.solution = make_solution(best->x, best->objective,
                                    status == BnbStatus::Optimal ? SolveStatus::Optimal : SolveStatus::Feasible,
                                    static_cast<int>(report.nodes_processed));
  } else {
    report.solution.status = status == BnbStatus::Infeasible ? SolveStatus::Infeasible : SolveStatus::IterLimit;
    report.solution.objective = kInf;
  }
  return report;
}

}  // namespace cardopt
