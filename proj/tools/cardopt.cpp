// cardopt: generate instances, run solvers and analyses, and emit JSON/CSV.

#include "cardopt/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace cardopt;
using namespace cardopt::experiment;

namespace {

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else write_text_file(out, text);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct KindFlags {
  std::string problem;
  std::string norm = "l2";
  double delta = 0.0;
  std::optional<int> k;
  std::optional<double> lambda;

  void add(CLI::App* app, bool allow_norm = true) {
    app->add_option("--problem", problem, "cardmin | cardcons | cardreg")
        ->check(CLI::IsMember({"cardmin", "cardcons", "cardreg"}));
    if (allow_norm) app->add_option("--norm", norm, "CardMin residual norm")->check(CLI::IsMember({"l1", "l2", "linf"}));
    app->add_option("--delta", delta, "CardMin residual level")->check(CLI::NonNegativeNumber);
  }

  ProblemKind kind() const {
    switch (parse_problem(problem.empty() ? "cardmin" : problem)) {
      case ProblemChoice::CardMin: return CardMin{parse_residual_norm(norm), delta};
      case ProblemChoice::CardCons:
        if (!k) throw std::invalid_argument("cardcons needs --k");
        return CardCons{*k};
      case ProblemChoice::CardReg:
        if (!lambda) throw std::invalid_argument("cardreg needs --lambda");
        return CardReg{*lambda};
    }
    return CardMin{};
  }
};

void add_bnb_flags(CLI::App* app, BnbConfig& c) {
  app->add_option("--max-nodes", c.max_nodes, "branch-and-bound node limit")->check(CLI::NonNegativeNumber);
  app->add_option("--time-limit-s", c.time_limit_s, "branch-and-bound time limit")->check(CLI::PositiveNumber);
  app->add_option("--gap-tol", c.gap_tol, "relative gap at which to stop")->check(CLI::NonNegativeNumber);
}

Vector planted_from_file(const std::string& path) { return vector_from_json(read_json_file(path).at("x_hat")); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse cardinality optimization toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "sample an instance and its planted signal");
  GenSpec gspec;
  std::string gen_kind = "gaussian", gen_out;
  KindFlags gen_kf;
  std::optional<int> gen_budget;
  gen->add_option("--kind", gen_kind, "gaussian | parity")->check(CLI::IsMember({"gaussian", "parity"}));
  gen->add_option("--m", gspec.m, "rows")->required()->check(CLI::PositiveNumber);
  gen->add_option("--n", gspec.n, "columns")->required()->check(CLI::PositiveNumber);
  gen->add_option("--k", gspec.k, "planted sparsity")->required()->check(CLI::NonNegativeNumber);
  gen->add_option("--noise", gspec.noise_sigma, "noise standard deviation")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gspec.seed, "generator seed");
  gen->add_option("--row-weight", gspec.row_weight, "ones per row (parity)")->check(CLI::PositiveNumber);
  gen->add_option("--budget", gen_budget, "cardcons sparsity budget (default: --k)");
  gen->add_option("--lambda", gen_kf.lambda, "cardreg weight");
  gen_kf.add(gen);
  gen->add_option("--out", gen_out, "output prefix: writes <out>.json and <out>.planted.json");

  // solve
  auto* solve = app.add_subcommand("solve", "run one method on an instance file");
  std::string solve_instance, solve_planted, solve_out;
  MethodParams sp;
  KindFlags solve_kf;
  std::optional<double> l1_weight;
  solve->add_option("--instance", solve_instance, "instance JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--method", sp.method, "solver")->check(CLI::IsMember(method_names()));
  solve_kf.add(solve);
  solve->add_option("--k", solve_kf.k, "sparsity (cardcons budget and greedy methods)");
  solve->add_option("--lambda", solve_kf.lambda, "cardreg weight; l1 weight when --l1-weight is absent");
  solve->add_option("--l1-weight", l1_weight, "l1 weight for ista, fista, homotopy")->check(CLI::PositiveNumber);
  solve->add_option("--tau", sp.tau, "LASSO radius for spg")->check(CLI::NonNegativeNumber);
  solve->add_option("--bigm", sp.bigm, "big-M value, 'tight' or 'planted'");
  solve->add_option("--planted", solve_planted, "planted-signal JSON (for --bigm planted)")->check(CLI::ExistingFile);
  add_bnb_flags(solve, sp.bnb);
  solve->add_option("--out", solve_out, "result JSON path (default stdout)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "recovery conditions of an instance matrix");
  std::string an_instance, an_planted, an_out;
  int an_k = 1;
  bool an_nsc = false, an_ric = false;
  analyze->add_option("--instance", an_instance, "instance JSON")->required()->check(CLI::ExistingFile);
  analyze->add_option("--k", an_k, "sparsity level")->check(CLI::NonNegativeNumber);
  analyze->add_flag("--nsc", an_nsc, "compute the nullspace constant");
  analyze->add_flag("--ric", an_ric, "compute the restricted isometry constant");
  analyze->add_option("--planted", an_planted, "planted-signal JSON for the source condition")->check(CLI::ExistingFile);
  analyze->add_option("--out", an_out, "report JSON path (default stdout)");

  // phase
  auto* phase = app.add_subcommand("phase", "grid experiment or big-M sweep, CSV output");
  ExperimentGrid grid;
  std::string ph_kind = "gaussian", ph_problem = "cardmin", ph_out;
  bool bigm_sweep = false;
  BigMSweep sweep;
  std::vector<int> ph_m, ph_k;
  std::optional<int> ph_n;
  phase->add_flag("--bigm-sweep", bigm_sweep, "parity big-M sweep over {1000, 100, 10, tight} plus covering");
  phase->add_option("--n", ph_n, "columns")->check(CLI::PositiveNumber);
  phase->add_option("--m", ph_m, "row counts")->delimiter(',');
  phase->add_option("--k", ph_k, "sparsity levels")->delimiter(',');
  phase->add_option("--trials", grid.trials, "trials per cell (seeds for --bigm-sweep)")->check(CLI::PositiveNumber);
  phase->add_option("--method", grid.params.method, "solver")->check(CLI::IsMember(method_names()));
  phase->add_option("--seed", grid.seed, "base seed; trial t uses seed + t");
  phase->add_option("--noise", grid.noise_sigma, "noise standard deviation")->check(CLI::NonNegativeNumber);
  phase->add_option("--kind", ph_kind, "gaussian | parity")->check(CLI::IsMember({"gaussian", "parity"}));
  phase->add_option("--row-weight", grid.row_weight, "ones per row (parity)")->check(CLI::PositiveNumber);
  phase->add_option("--problem", ph_problem, "cardmin | cardcons | cardreg")
      ->check(CLI::IsMember({"cardmin", "cardcons", "cardreg"}));
  phase->add_option("--delta", grid.delta, "CardMin residual level")->check(CLI::NonNegativeNumber);
  phase->add_option("--lambda", grid.reg_lambda, "cardreg weight; also the l1 weight of ista, fista, homotopy")
      ->check(CLI::PositiveNumber);
  phase->add_option("--tau", grid.params.tau, "LASSO radius for spg")->check(CLI::NonNegativeNumber);
  phase->add_option("--bigm", grid.params.bigm, "big-M value, 'tight' or 'planted'");
  add_bnb_flags(phase, grid.params.bnb);
  phase->add_option("--out", ph_out, "CSV path (default stdout)");

  // portfolio
  auto* port = app.add_subcommand("portfolio", "cardinality-constrained portfolio from CSV data");
  std::string pf_dir, pf_out;
  PortfolioFlags pf;
  BnbConfig pf_bnb;
  port->add_option("--data", pf_dir, "directory with covariance.csv, returns.csv, optional positions.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  port->add_option("--k", pf.k, "maximum number of positions")->required()->check(CLI::NonNegativeNumber);
  port->add_option("--lambda", pf.lambda, "risk aversion")->check(CLI::PositiveNumber);
  port->add_option("--theta", pf.theta, "minimum position size")->check(CLI::NonNegativeNumber);
  port->add_option("--long-cap", pf.long_cap, "maximum long weight per asset")->check(CLI::NonNegativeNumber);
  port->add_option("--short-cap", pf.short_cap, "maximum short weight per asset")->check(CLI::NonNegativeNumber);
  port->add_option("--long-min", pf.exposure.long_min, "minimum total long exposure");
  port->add_option("--long-max", pf.exposure.long_max, "maximum total long exposure");
  port->add_option("--short-min", pf.exposure.short_min, "minimum total short exposure");
  port->add_option("--short-max", pf.exposure.short_max, "maximum total short exposure");
  port->add_option("-H,--rank", pf.H, "reduced-rank covariance with H factors");
  port->add_option("--threshold", pf.report_threshold, "report positions above this magnitude");
  add_bnb_flags(port, pf_bnb);
  port->add_option("--out", pf_out, "report JSON path (default stdout)");

  // export-lp
  auto* exp = app.add_subcommand("export-lp", "write the big-M CardMin model in LP format");
  std::string ex_instance, ex_planted, ex_out;
  MethodParams ep;
  exp->add_option("--instance", ex_instance, "instance JSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--bigm", ep.bigm, "big-M value, 'tight' or 'planted'");
  exp->add_option("--planted", ex_planted, "planted-signal JSON (for --bigm planted)")->check(CLI::ExistingFile);
  exp->add_option("--out", ex_out, "LP file path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      gspec.kind = parse_matrix_kind(gen_kind);
      gen_kf.k = gen_budget ? gen_budget : std::optional<int>(gspec.k);
      gspec.problem = gen_kf.kind();
      const Generated g = generate(gspec);
      const std::string inst = dump(to_json(g.instance)), planted = dump(planted_json(gspec, g.x_hat));
      if (gen_out.empty()) {
        std::cout << inst;
      } else {
        write_text_file(gen_out + ".json", inst);
        write_text_file(gen_out + ".planted.json", planted);
      }
    } else if (*solve) {
      ProblemInstance inst = instance_from_json(read_json_file(solve_instance));
      if (!solve_kf.problem.empty()) {
        inst.kind = solve_kf.kind();
        inst.validate();
      }
      sp.k = solve_kf.k;
      sp.lambda = l1_weight ? l1_weight : solve_kf.lambda;
      if (!solve_planted.empty()) sp.planted = planted_from_file(solve_planted);
      emit(solve_out, dump(result_json(run_method(inst, sp))));
    } else if (*analyze) {
      const ProblemInstance inst = instance_from_json(read_json_file(an_instance));
      const RecoveryReport r = recovery_report(inst.A, an_k, an_nsc, an_ric);
      json j;
      j["k"] = r.k;
      j["mu"] = r.mu;
      j["spark"] = std::holds_alternative<int>(r.spark) ? json(std::get<int>(r.spark)) : json("none");
      j["nsc"] = r.nsc ? json(*r.nsc) : json(nullptr);
      j["ric"] = r.ric ? json(*r.ric) : json(nullptr);
      j["conditions"] = {{"l0_unique_2k_mu", r.conditions.l0_unique_2k_mu},
                         {"l0l1_equiv_mu", r.conditions.l0l1_equiv_mu},
                         {"nsp_half", r.conditions.nsp_half ? json(*r.conditions.nsp_half) : json(nullptr)},
                         {"spark_half", r.conditions.spark_half}};
      if (!an_planted.empty()) {
        const SourceCondition sc = strong_source_condition(inst.A, planted_from_file(an_planted));
        j["source_condition"] = {{"holds", sc.holds},
                                 {"witness", sc.witness ? to_json(*sc.witness) : json(nullptr)}};
      }
      emit(an_out, dump(j));
    } else if (*phase) {
      if (bigm_sweep) {
        sweep.seed = grid.seed;
        if (phase->count("--trials")) sweep.seeds = grid.trials;
        if (ph_n) sweep.n = *ph_n;
        if (!ph_m.empty()) sweep.m = ph_m.front();
        if (!ph_k.empty()) sweep.k = ph_k.front();
        sweep.row_weight = grid.row_weight;
        sweep.bnb = grid.params.bnb;
        const auto rows = run_bigm_sweep(sweep);
        std::string text = experiment_csv(rows);
        text += "\nmethod,median_nodes\n";
        for (const auto& [name, med] : median_nodes_by_method(rows)) text += name + "," + fmt_double(med) + "\n";
        emit(ph_out, text);
      } else {
        if (!ph_n) throw std::invalid_argument("phase: --n is required");
        grid.n = *ph_n;
        grid.m_values = ph_m;
        grid.k_values = ph_k;
        grid.matrix = parse_matrix_kind(ph_kind);
        grid.problem = parse_problem(ph_problem);
        grid.params.lambda = grid.reg_lambda;
        emit(ph_out, experiment_csv(run_experiment(grid)));
      }
    } else if (*port) {
      const PortfolioInstance p = load_portfolio(pf_dir, pf, &std::cerr);
      const auto start = std::chrono::steady_clock::now();
      const SolveReport rep = solve_portfolio(p, pf_bnb);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      emit(pf_out, dump(portfolio_report(p, rep, pf.report_threshold, ms)));
    } else if (*exp) {
      const ProblemInstance inst = instance_from_json(read_json_file(ex_instance));
      if (!ex_planted.empty()) ep.planted = planted_from_file(ex_planted);
      emit(ex_out, export_lp_file(build_bigm_cardmin(inst, bigm_spec(inst, ep))));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
