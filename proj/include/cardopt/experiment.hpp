#pragma once

// Instance generation, solver dispatch and machine-readable reporting shared
// by the command-line tool and the acceptance runner.

#include "cardopt/analysis.hpp"
#include "cardopt/heuristics.hpp"
#include "cardopt/models.hpp"
#include "cardopt/surrogate.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace cardopt::experiment {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Generation

enum class MatrixKind { Gaussian, BinaryParity };

inline MatrixKind parse_matrix_kind(const std::string& s) {
  if (s == "gaussian") return MatrixKind::Gaussian;
  if (s == "parity" || s == "binary-parity") return MatrixKind::BinaryParity;
  throw std::invalid_argument("unknown matrix kind: " + s);
}

inline const char* to_string(MatrixKind k) { return k == MatrixKind::Gaussian ? "gaussian" : "parity"; }

struct GenSpec {
  MatrixKind kind = MatrixKind::Gaussian;
  int m = 0;
  int n = 0;
  int k = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  int row_weight = 6;  // BinaryParity only
  ProblemKind problem = CardMin{};
};

struct Generated {
  ProblemInstance instance;
  Vector x_hat;
};

inline constexpr int kMaxRankResamples = 100;

/// Random 0/1 matrix with exactly w ones per row, resampled until it has full row rank.
inline Matrix parity_matrix(std::mt19937_64& rng, int m, int n, int w) {
  if (w < 1 || w > n) throw std::invalid_argument("gen: row weight must lie in [1, n]");
  std::vector<int> cols(n);
  for (int attempt = 0; attempt < kMaxRankResamples; ++attempt) {
    Matrix A = Matrix::Zero(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) cols[j] = j;
      // partial Fisher-Yates with an explicit index draw keeps the stream stable
      for (int t = 0; t < w; ++t) {
        std::uniform_int_distribution<int> pick(t, n - 1);
        std::swap(cols[t], cols[pick(rng)]);
        A(i, cols[t]) = 1.0;
      }
    }
    if (matrix_rank(A) == m) return A;
  }
  throw std::runtime_error("gen: no full-row-rank parity matrix after 100 resamples");
}

inline Generated generate(const GenSpec& spec) {
  if (spec.m < 1 || spec.n < 1) throw std::invalid_argument("gen: m and n must be positive");
  if (spec.k < 0 || spec.k > spec.n) throw std::invalid_argument("gen: k must lie in [0, n]");
  if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("gen: noise_sigma must be nonnegative");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> g(0.0, 1.0);

  Matrix A;
  if (spec.kind == MatrixKind::Gaussian) {
    A.resize(spec.m, spec.n);
    for (int i = 0; i < spec.m; ++i)
      for (int j = 0; j < spec.n; ++j) A(i, j) = g(rng);
  } else {
    A = parity_matrix(rng, spec.m, spec.n, spec.row_weight);
  }

  std::vector<int> idx(spec.n);
  for (int j = 0; j < spec.n; ++j) idx[j] = j;
  for (int t = 0; t < spec.k; ++t) {
    std::uniform_int_distribution<int> pick(t, spec.n - 1);
    std::swap(idx[t], idx[pick(rng)]);
  }
  Vector x = Vector::Zero(spec.n);
  for (int t = 0; t < spec.k; ++t) {
    double v = 0.0;
    while (v == 0.0) v = g(rng);
    x[idx[t]] = v;
  }

  Vector b = A * x;
  if (spec.noise_sigma > 0.0)
    for (int i = 0; i < spec.m; ++i) b[i] += spec.noise_sigma * g(rng);

  Generated out;
  out.instance.A = std::move(A);
  out.instance.b = std::move(b);
  out.instance.kind = spec.problem;
  out.x_hat = std::move(x);
  out.instance.validate();
  return out;
}

// ---------------------------------------------------------------------------
// JSON encoding

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vector vector_from_json(const json& a) {
  if (!a.is_array()) throw std::invalid_argument("json: expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline const char* to_string(ResidualNorm p) {
  switch (p) {
    case ResidualNorm::L1: return "l1";
    case ResidualNorm::L2: return "l2";
    case ResidualNorm::Linf: return "linf";
  }
  return "?";
}

inline ResidualNorm parse_residual_norm(const std::string& s) {
  if (s == "l1") return ResidualNorm::L1;
  if (s == "l2") return ResidualNorm::L2;
  if (s == "linf") return ResidualNorm::Linf;
  throw std::invalid_argument("unknown residual norm: " + s);
}

inline json to_json(const ProblemKind& kind) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, CardMin>)
          return {{"problem", "cardmin"}, {"residual_norm", to_string(k.residual_norm)}, {"delta", k.delta}};
        else if constexpr (std::is_same_v<K, CardCons>)
          return {{"problem", "cardcons"}, {"k", k.k}};
        else
          return {{"problem", "cardreg"}, {"lambda", k.lambda}};
      },
      kind);
}

inline ProblemKind kind_from_json(const json& j) {
  const std::string p = j.at("problem").get<std::string>();
  if (p == "cardmin")
    return CardMin{parse_residual_norm(j.value("residual_norm", std::string("l2"))), j.value("delta", 0.0)};
  if (p == "cardcons") return CardCons{j.at("k").get<int>()};
  if (p == "cardreg") return CardReg{j.at("lambda").get<double>()};
  throw std::invalid_argument("unknown problem: " + p);
}

inline json to_json(const ProblemInstance& inst) {
  json rows = json::array();
  for (int i = 0; i < inst.rows(); ++i) rows.push_back(to_json(Vector(inst.A.row(i).transpose())));
  json j = {{"m", inst.rows()}, {"n", inst.cols()}, {"A", rows}, {"b", to_json(inst.b)}, {"kind", to_json(inst.kind)}};
  if (inst.bounds) j["bounds"] = {{"lower", to_json(inst.bounds->lower)}, {"upper", to_json(inst.bounds->upper)}};
  return j;
}

inline ProblemInstance instance_from_json(const json& j) {
  ProblemInstance inst;
  const int m = j.at("m").get<int>(), n = j.at("n").get<int>();
  const json& rows = j.at("A");
  if (!rows.is_array() || static_cast<int>(rows.size()) != m) throw std::invalid_argument("instance: A must have m rows");
  inst.A.resize(m, n);
  for (int i = 0; i < m; ++i) {
    const Vector r = vector_from_json(rows[i]);
    if (r.size() != n) throw std::invalid_argument("instance: row length differs from n");
    inst.A.row(i) = r.transpose();
  }
  inst.b = vector_from_json(j.at("b"));
  inst.kind = kind_from_json(j.at("kind"));
  if (j.contains("bounds"))
    inst.bounds = VarBounds{vector_from_json(j["bounds"].at("lower")), vector_from_json(j["bounds"].at("upper"))};
  inst.validate();
  return inst;
}

inline json planted_json(const GenSpec& spec, const Vector& x_hat) {
  json support = json::array();
  for (int j : support_of(x_hat, 0.0)) support.push_back(j);
  return {{"matrix", to_string(spec.kind)}, {"seed", spec.seed}, {"noise_sigma", spec.noise_sigma},
          {"x_hat", to_json(x_hat)}, {"support", support}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Solver dispatch

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"bnb",      "covering", "bigm", "bp-lp", "ista",   "fista",
                                                 "homotopy", "spg",      "admm", "omp",   "cosamp", "iht",
                                                 "sl0",      "altproj",  "oracle"};
  return names;
}

struct MethodParams {
  std::string method = "bnb";
  std::optional<int> k;          // sparsity for omp, cosamp, iht, altproj outside CardCons
  std::optional<double> lambda;  // l1 weight for ista, fista, homotopy
  std::optional<double> tau;     // radius for spg
  std::string bigm = "1000";     // a positive number, "tight" or "planted"
  std::optional<Vector> planted; // needed by bigm = "planted"
  BnbConfig bnb;
};

struct RunResult {
  std::string status;
  Solution solution;
  bool has_point = false;
  std::optional<double> lower_bound;
  std::optional<double> gap;
  long nodes = 0;
  int iterations = 0;
  double time_ms = 0.0;
};

/// Largest planted magnitude rounded up to one decimal: the instance-specific
/// uniform bound that knows the signal.
inline double planted_bigm(const Vector& x_hat) {
  const double top = x_hat.size() ? x_hat.lpNorm<Eigen::Infinity>() : 0.0;
  return std::max(0.1, std::ceil(10.0 * top - 1e-9) / 10.0);
}

/// "tight" runs LP bound tightening; "planted" uses planted_bigm.
inline BigMSpec bigm_spec(const ProblemInstance& inst, const MethodParams& p) {
  const std::string& text = p.bigm;
  if (text == "planted") {
    if (!p.planted) throw std::invalid_argument("bigm: 'planted' needs the planted signal");
    return planted_bigm(*p.planted);
  }
  if (text == "tight") {
    const TightenResult t = tighten_bounds(inst);
    if (t.status != TightenStatus::Bounded) throw std::runtime_error("bigm: bound tightening found no finite bounds");
    return t.bounds;
  }
  std::size_t used = 0;
  const double M = std::stod(text, &used);
  if (used != text.size() || !(M > 0.0)) throw std::invalid_argument("bigm: expected a positive number, 'tight' or 'planted'");
  return M;
}

namespace detail {

inline int sparsity_param(const ProblemInstance& inst, const MethodParams& p) {
  if (p.k) return *p.k;
  if (const auto* cc = std::get_if<CardCons>(&inst.kind)) return cc->k;
  throw std::invalid_argument(p.method + ": needs --k outside cardcons");
}

inline double lambda_param(const MethodParams& p) {
  if (!p.lambda) throw std::invalid_argument(p.method + ": needs --lambda");
  return *p.lambda;
}

/// Wraps a point from a non-exact solver; points outside the instance's
/// feasible set are reported as Infeasible.
inline RunResult from_point(const ProblemInstance& inst, const Vector& x, SolveStatus st, int iterations) {
  RunResult r;
  r.solution = make_solution(inst, x, st, iterations);
  r.has_point = true;
  r.iterations = iterations;
  r.status = is_feasible(inst, x) ? to_string(st) : to_string(SolveStatus::Infeasible);
  return r;
}

inline RunResult from_report(const SolveReport& rep) {
  RunResult r;
  r.status = to_string(rep.status);
  r.solution = rep.solution;
  r.has_point = rep.has_incumbent;
  r.nodes = rep.nodes_processed;
  r.iterations = rep.solution.iterations;
  if (std::isfinite(rep.lower_bound)) r.lower_bound = rep.lower_bound;
  if (rep.has_incumbent && std::isfinite(rep.gap)) r.gap = rep.gap;
  return r;
}

}  // namespace detail

inline RunResult run_method(const ProblemInstance& inst, const MethodParams& p) {
  const auto start = std::chrono::steady_clock::now();
  const Matrix& A = inst.A;
  const Vector& b = inst.b;
  RunResult r;
  const std::string& m = p.method;
  if (m == "bnb") {
    r = detail::from_report(solve_exact(inst, methods::SupportBnB{}, p.bnb));
  } else if (m == "covering") {
    r = detail::from_report(solve_exact(inst, methods::Covering{}, p.bnb));
  } else if (m == "bigm") {
    r = detail::from_report(solve_exact(inst, methods::BigM{bigm_spec(inst, p)}, p.bnb));
  } else if (m == "oracle") {
    const Solution s = oracle_solve(inst);
    r = detail::from_point(inst, s.x, s.status, s.iterations);
    r.lower_bound = s.objective;
    r.gap = 0.0;
  } else if (m == "bp-lp") {
    const Solution s = bp_lp(A, b);
    if (s.status == SolveStatus::Infeasible) r.status = to_string(s.status);
    else r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else if (m == "admm") {
    const Solution s = bp_admm(A, b);
    r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else if (m == "ista" || m == "fista") {
    SolverOptions o;
    o.accelerate = m == "fista";
    const Solution s = l1ls_proxgrad(A, b, detail::lambda_param(p), o);
    r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else if (m == "homotopy") {
    const double lam = detail::lambda_param(p);
    const auto path = homotopy_path(A, b, lam);
    r = detail::from_point(inst, path_at(path, lam), SolveStatus::Optimal, static_cast<int>(path.size()) - 1);
  } else if (m == "spg") {
    if (!p.tau) throw std::invalid_argument("spg: needs --tau");
    const Solution s = lasso_spg(A, b, *p.tau);
    r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else if (m == "omp") {
    OmpStop stop = omp_stop::MaxCard{0};
    const auto* cm = std::get_if<CardMin>(&inst.kind);
    if (cm && !p.k) {
      if (cm->residual_norm != ResidualNorm::L2) throw std::invalid_argument("omp: cardmin needs an l2 residual");
      stop = omp_stop::Residual{cm->delta};
    } else {
      stop = omp_stop::MaxCard{detail::sparsity_param(inst, p)};
    }
    const Solution s = omp(A, b, stop).first;
    r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else if (m == "cosamp") {
    const Solution s = cosamp(A, b, detail::sparsity_param(inst, p)).first;
    r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else if (m == "iht") {
    IhtMode mode = iht_modes::Cons{0};
    if (const auto* cr = std::get_if<CardReg>(&inst.kind); cr && !p.k) mode = iht_modes::Reg{cr->lambda};
    else mode = iht_modes::Cons{detail::sparsity_param(inst, p)};
    const Solution s = iht(A, b, mode).first;
    r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else if (m == "sl0") {
    const Solution s = sl0(A, b);
    r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else if (m == "altproj") {
    const Solution s = altproj(A, b, detail::sparsity_param(inst, p));
    r = detail::from_point(inst, s.x, s.status, s.iterations);
  } else {
    throw std::invalid_argument("unknown method: " + m);
  }
  r.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline json result_json(const RunResult& r) {
  json j;
  j["status"] = r.status;
  if (r.has_point) {
    json support = json::array();
    for (int i : r.solution.support) support.push_back(i);
    j["objective"] = r.solution.objective;
    j["x"] = to_json(r.solution.x);
    j["support"] = support;
    j["cardinality"] = r.solution.cardinality;
  } else {
    j["objective"] = j["x"] = j["support"] = j["cardinality"] = nullptr;
  }
  j["lower_bound"] = r.lower_bound ? json(*r.lower_bound) : json(nullptr);
  j["gap"] = r.gap ? json(*r.gap) : json(nullptr);
  j["nodes"] = r.nodes;
  j["iterations"] = r.iterations;
  j["time_ms"] = r.time_ms;
  return j;
}

/// Support equality with the planted signal. Entries below 1e-6 of the
/// largest magnitude count as zero so that first-order solvers are not
/// penalized for roundoff-level residue.
inline bool recovered(const Vector& x, const Vector& x_hat) {
  if (x.size() != x_hat.size()) return false;
  const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
  return support_of(x, 1e-6 * scale) == support_of(x_hat, 0.0);
}

// ---------------------------------------------------------------------------
// Experiments

inline const char* kCsvHeader =
    "instance_id,method,m,n,k,noise,status,objective,cardinality,lower_bound,gap,nodes,iterations,time_ms,recovered";

struct RunRecord {
  std::string instance_id;
  std::string method;
  int m = 0, n = 0, k = 0;
  double noise = 0.0;
  RunResult result;
  bool recovered = false;
};

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_ms(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string csv_row(const RunRecord& r) {
  const RunResult& x = r.result;
  auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  std::ostringstream s;
  s << r.instance_id << ',' << r.method << ',' << r.m << ',' << r.n << ',' << r.k << ',' << fmt_double(r.noise) << ','
    << x.status << ',' << (x.has_point ? fmt_double(x.solution.objective) : "") << ','
    << (x.has_point ? std::to_string(x.solution.cardinality) : "") << ',' << opt(x.lower_bound) << ','
    << opt(x.gap) << ',' << x.nodes << ',' << x.iterations << ',' << fmt_ms(x.time_ms) << ','
    << (r.recovered ? "true" : "false");
  return s.str();
}

enum class ProblemChoice { CardMin, CardCons, CardReg };

inline ProblemChoice parse_problem(const std::string& s) {
  if (s == "cardmin") return ProblemChoice::CardMin;
  if (s == "cardcons") return ProblemChoice::CardCons;
  if (s == "cardreg") return ProblemChoice::CardReg;
  throw std::invalid_argument("unknown problem: " + s);
}

struct ExperimentGrid {
  int n = 0;
  std::vector<int> m_values;
  std::vector<int> k_values;
  int trials = 1;
  MethodParams params;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  MatrixKind matrix = MatrixKind::Gaussian;
  int row_weight = 6;
  ProblemChoice problem = ProblemChoice::CardMin;
  double delta = 0.0;         // CardMin residual level
  double reg_lambda = 1.0;    // CardReg weight

  void validate() const {
    if (n < 1) throw std::invalid_argument("grid: n must be positive");
    if (trials < 1) throw std::invalid_argument("grid: trials must be at least 1");
    for (int m : m_values)
      if (m < 1) throw std::invalid_argument("grid: m values must be positive");
    for (int k : k_values)
      if (k < 1 || k > n) throw std::invalid_argument("grid: k values must lie in [1, n]");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("grid: noise must be nonnegative");
  }
};

inline ProblemKind problem_for(const ExperimentGrid& g, int k) {
  switch (g.problem) {
    case ProblemChoice::CardMin: return CardMin{ResidualNorm::L2, g.delta};
    case ProblemChoice::CardCons: return CardCons{k};
    case ProblemChoice::CardReg: return CardReg{g.reg_lambda};
  }
  return CardMin{};
}

/// One generated instance and one solver run. Failures become rows with status "Error".
inline RunRecord run_trial(const GenSpec& spec, const MethodParams& params, std::string id, std::string label) {
  RunRecord rec;
  rec.instance_id = std::move(id);
  rec.method = std::move(label);
  rec.m = spec.m;
  rec.n = spec.n;
  rec.k = spec.k;
  rec.noise = spec.noise_sigma;
  try {
    const Generated g = generate(spec);
    MethodParams p = params;
    if (p.method == "bigm" && p.bigm == "planted") p.planted = g.x_hat;
    rec.result = run_method(g.instance, p);
    rec.recovered = rec.result.has_point && recovered(rec.result.solution.x, g.x_hat);
  } catch (const std::exception&) {
    rec.result = RunResult{};
    rec.result.status = "Error";
  }
  return rec;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Trial t of every cell uses seed + t.
inline std::vector<RunRecord> run_experiment(const ExperimentGrid& grid) {
  grid.validate();
  std::vector<RunRecord> rows;
  for (int m : grid.m_values)
    for (int k : grid.k_values)
      for (int t = 0; t < grid.trials; ++t) {
        GenSpec spec;
        spec.kind = grid.matrix;
        spec.m = m;
        spec.n = grid.n;
        spec.k = k;
        spec.noise_sigma = grid.noise_sigma;
        spec.seed = grid.seed + static_cast<std::uint64_t>(t);
        spec.row_weight = grid.row_weight;
        spec.problem = problem_for(grid, k);
        MethodParams p = grid.params;
        // Greedy methods get the cell's sparsity unless the problem supplies its own target.
        const bool takes_k = p.method == "cosamp" || p.method == "altproj" ||
                             (p.method == "iht" && grid.problem != ProblemChoice::CardReg);
        if (!p.k && takes_k) p.k = k;
        const std::string id = "m" + std::to_string(m) + "_k" + std::to_string(k) + "_t" + std::to_string(t);
        rows.push_back(run_trial(spec, p, id, p.method));
      }
  return rows;
}

/// Row block followed, when nonempty, by a blank line and a per-cell summary.
inline std::string experiment_csv(const std::vector<RunRecord>& rows) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << csv_row(r) << '\n';
  if (rows.empty()) return out.str();

  struct Cell {
    int trials = 0, successes = 0;
    std::vector<double> nodes;
  };
  std::map<std::tuple<std::string, int, int>, Cell> cells;
  for (const auto& r : rows) {
    Cell& c = cells[{r.method, r.m, r.k}];
    ++c.trials;
    c.successes += r.recovered;
    c.nodes.push_back(static_cast<double>(r.result.nodes));
  }
  out << '\n' << "method,m,k,trials,success_rate,median_nodes\n";
  for (const auto& [key, c] : cells)
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << c.trials << ','
        << fmt_double(static_cast<double>(c.successes) / c.trials) << ',' << fmt_double(median(c.nodes)) << '\n';
  return out.str();
}

struct BigMSweep {
  int m = 20;
  int n = 40;
  int k = 4;
  int row_weight = 6;
  std::uint64_t seed = 0;
  int seeds = 20;
  // "planted" is the signal-aware bound; it is labelled "bigm:tight".
  std::vector<std::string> big_ms = {"1000", "100", "10", "planted"};
  BnbConfig bnb;
};

/// Every seed's parity instance solved under each big-M value and by the
/// covering method; methods are labelled "bigm:<M>" and "covering".
inline std::vector<RunRecord> run_bigm_sweep(const BigMSweep& sw) {
  std::vector<RunRecord> rows;
  for (int t = 0; t < sw.seeds; ++t) {
    GenSpec spec;
    spec.kind = MatrixKind::BinaryParity;
    spec.m = sw.m;
    spec.n = sw.n;
    spec.k = sw.k;
    spec.row_weight = sw.row_weight;
    spec.seed = sw.seed + static_cast<std::uint64_t>(t);
    const std::string id = "parity_t" + std::to_string(t);
    for (const auto& M : sw.big_ms) {
      MethodParams p;
      p.method = "bigm";
      p.bigm = M;
      p.bnb = sw.bnb;
      rows.push_back(run_trial(spec, p, id, "bigm:" + (M == "planted" ? std::string("tight") : M)));
    }
    MethodParams cov;
    cov.method = "covering";
    cov.bnb = sw.bnb;
    rows.push_back(run_trial(spec, cov, id, "covering"));
  }
  return rows;
}

/// Median node count per method label, in first-appearance order.
inline std::vector<std::pair<std::string, double>> median_nodes_by_method(const std::vector<RunRecord>& rows) {
  std::vector<std::pair<std::string, std::vector<double>>> acc;
  for (const auto& r : rows) {
    auto it = std::find_if(acc.begin(), acc.end(), [&](const auto& e) { return e.first == r.method; });
    if (it == acc.end()) {
      acc.push_back({r.method, {}});
      it = acc.end() - 1;
    }
    it->second.push_back(static_cast<double>(r.result.nodes));
  }
  std::vector<std::pair<std::string, double>> out;
  for (auto& [name, v] : acc) out.push_back({name, median(v)});
  return out;
}

// ---------------------------------------------------------------------------
// Portfolio data

/// Plain numeric CSV without a header; every row must have the same width.
inline Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos)
        throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": malformed number '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  Matrix M(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

inline Vector read_csv_vector(const std::string& path) {
  const Matrix M = read_csv_matrix(path);
  if (M.cols() == 1) return M.col(0);
  if (M.rows() == 1) return M.row(0).transpose();
  throw std::invalid_argument(path + ": expected a single column");
}

struct PortfolioFlags {
  int k = 0;
  double lambda = 1.0;
  double theta = 0.01;
  double long_cap = 1.0;
  double short_cap = 0.0;
  Exposure exposure{1.0, 1.0, 0.0, 0.0};
  std::optional<int> H;
  double report_threshold = 1e-6;
};

inline constexpr double kAsymmetryWarn = 1e-8;

/// Reads covariance.csv, returns.csv and optional positions.csv from dir.
/// Q is symmetrized; a warning goes to `warn` when the asymmetry exceeds 1e-8.
inline PortfolioInstance load_portfolio(const std::string& dir, const PortfolioFlags& f, std::ostream* warn = nullptr) {
  PortfolioInstance p;
  p.Q = read_csv_matrix(dir + "/covariance.csv");
  p.mu = read_csv_vector(dir + "/returns.csv");
  const int n = p.n();
  if (p.Q.rows() != n || p.Q.cols() != n)
    throw std::invalid_argument("portfolio: covariance is " + std::to_string(p.Q.rows()) + "x" +
                                std::to_string(p.Q.cols()) + " but returns has " + std::to_string(n) + " entries");
  const double asym = (p.Q - p.Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryWarn && warn) *warn << "warning: covariance asymmetry " << asym << " symmetrized\n";
  p.Q = (0.5 * (p.Q + p.Q.transpose())).eval();
  std::ifstream probe(dir + "/positions.csv");
  if (probe) {
    p.x0 = read_csv_vector(dir + "/positions.csv");
    if (p.x0.size() != n) throw std::invalid_argument("portfolio: positions length differs from returns");
  }
  p.lambda = f.lambda;
  p.k = f.k;
  p.theta_plus = Vector::Constant(n, f.long_cap > 0.0 ? f.theta : 0.0);
  p.theta_minus = Vector::Constant(n, f.short_cap > 0.0 ? f.theta : 0.0);
  p.u_plus = Vector::Constant(n, f.long_cap);
  p.u_minus = Vector::Constant(n, f.short_cap);
  p.exposure = f.exposure;
  p.H = f.H;
  p.validate();
  return p;
}

inline json portfolio_report(const PortfolioInstance& p, const SolveReport& rep, double threshold, double time_ms) {
  json j;
  j["status"] = to_string(rep.status);
  j["n"] = p.n();
  j["k"] = p.k;
  j["H"] = p.H ? json(*p.H) : json(nullptr);
  j["nodes"] = rep.nodes_processed;
  j["lower_bound"] = std::isfinite(rep.lower_bound) ? json(rep.lower_bound) : json(nullptr);
  j["time_ms"] = time_ms;
  if (!rep.has_incumbent) {
    j["objective"] = j["objective_full_q"] = j["gap"] = nullptr;
    j["positions"] = json::array();
    return j;
  }
  const Vector& x = rep.solution.x;
  j["objective"] = rep.solution.objective;
  j["objective_full_q"] = p.lambda * x.dot(p.Q * x) - p.mu.dot(x);
  j["gap"] = std::isfinite(rep.gap) ? json(rep.gap) : json(nullptr);
  json pos = json::array();
  for (int i = 0; i < p.n(); ++i)
    if (std::abs(x[i]) > threshold) pos.push_back({{"asset", i}, {"weight", x[i]}});
  j["positions"] = pos;
  return j;
}

}  // namespace cardopt::experiment
