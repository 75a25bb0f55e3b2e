#include "cardopt/models/bounds.hpp"
#include "cardopt/models/exact.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace cardopt;
using namespace testing_support;

namespace {

ProblemInstance make(Matrix A, Vector b, ProblemKind kind) {
  ProblemInstance inst;
  inst.A = std::move(A);
  inst.b = std::move(b);
  inst.kind = kind;
  return inst;
}

Matrix mat(int m, int n, std::initializer_list<double> v) {
  Matrix A(m, n);
  auto it = v.begin();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = *it++;
  return A;
}

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

// The 2x2 instance with x-hat_k = (0,0), (0,1/5), (-2,1).
ProblemInstance prop_instance(ProblemKind kind) { return make(mat(2, 2, {0, 1, 1, 2}), vec({1, 0}), kind); }

}  // namespace

// ---------------------------------------------------------------------------
// Big-M builder

TEST(BigM, SingleVariableExample) {
  const auto inst = make(mat(1, 1, {2}), vec({4}), CardMin{});
  const MilpModel model = build_bigm_cardmin(inst, 10.0);
  EXPECT_EQ(model.base.num_vars(), 2);
  EXPECT_EQ(model.integral.size(), 1u);
  EXPECT_EQ(model.base.num_rows(), 3);
  const SolveReport r = solve_exact(inst, methods::BigM{10.0});
  EXPECT_EQ(r.status, BnbStatus::Optimal);
  EXPECT_NEAR(r.solution.x[0], 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.solution.objective, 1.0);
}

TEST(BigM, ZeroRightHandSide) {
  std::mt19937_64 rng(3);
  const auto inst = make(gaussian_matrix(rng, 3, 5), Vector::Zero(3), CardMin{});
  const SolveReport r = solve_exact(inst, methods::BigM{10.0});
  EXPECT_EQ(r.status, BnbStatus::Optimal);
  EXPECT_DOUBLE_EQ(r.solution.objective, 0.0);
  EXPECT_EQ(r.solution.x.norm(), 0.0);
}

TEST(BigM, ModelShape) {
  std::mt19937_64 rng(4);
  const auto inst = make(gaussian_matrix(rng, 3, 5), gaussian_vector(rng, 3), CardMin{});
  const MilpModel eq = build_bigm_cardmin(inst, 5.0);
  EXPECT_EQ(eq.base.num_vars(), 10);
  EXPECT_EQ(eq.base.num_rows(), 3 + 10);
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(eq.base.objective[j], 0.0);
    EXPECT_EQ(eq.base.objective[5 + j], 1.0);
  }

  auto l1 = inst;
  l1.kind = CardMin{ResidualNorm::L1, 0.5};
  const MilpModel m1 = build_bigm_cardmin(l1, 5.0);
  EXPECT_EQ(m1.base.num_vars(), 10 + 3);
  EXPECT_EQ(m1.base.num_rows(), 2 * 3 + 1 + 10);

  auto linf = inst;
  linf.kind = CardMin{ResidualNorm::Linf, 0.5};
  EXPECT_EQ(build_bigm_cardmin(linf, 5.0).base.num_rows(), 2 * 3 + 10);
}

TEST(BigM, RejectsNonlinearResidualAndBadM) {
  std::mt19937_64 rng(5);
  const auto inst = make(gaussian_matrix(rng, 2, 3), gaussian_vector(rng, 2), CardMin{ResidualNorm::L2, 0.1});
  EXPECT_THROW(build_bigm_cardmin(inst, 1.0), std::invalid_argument);
  auto eq = inst;
  eq.kind = CardMin{};
  EXPECT_THROW(build_bigm_cardmin(eq, 0.0), std::invalid_argument);
  EXPECT_THROW(build_bigm_cardmin(eq, VarBounds{vec({0.1, -1, -1}), vec({1, 1, 1})}), std::invalid_argument);
  EXPECT_THROW(solve_exact(make(eq.A, eq.b, CardCons{1}), methods::BigM{}), std::invalid_argument);
}

TEST(BigM, TooSmallMOnlyRestricts) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const Matrix A = gaussian_matrix(rng, 4, 8);
    const Vector xh = sparse_signal(rng, 8, 2);
    const auto inst = make(A, A * xh, CardMin{});
    const SolveReport cov = solve_exact(inst, methods::Covering{});
    const double small = 0.25 * xh.cwiseAbs().maxCoeff();
    const SolveReport big = solve_exact(inst, methods::BigM{small});
    ASSERT_EQ(cov.status, BnbStatus::Optimal);
    if (big.status == BnbStatus::Infeasible) continue;
    ASSERT_EQ(big.status, BnbStatus::Optimal);
    EXPECT_GE(big.solution.objective, cov.solution.objective);
  }
}

// ---------------------------------------------------------------------------
// Bounds

TEST(Ellipsoid, Examples) {
  const VarBounds s = ellipsoid_bounds(Matrix::Identity(3, 3), Vector::Zero(3), 4.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(s.lower[i], -2.0, 1e-12);
    EXPECT_NEAR(s.upper[i], 2.0, 1e-12);
  }
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 4;
  Q(1, 1) = 1;
  const VarBounds e = ellipsoid_bounds(Q, vec({1, 0}), 4.0);
  EXPECT_NEAR(e.lower[0], 0.0, 1e-12);
  EXPECT_NEAR(e.lower[1], -2.0, 1e-12);
  EXPECT_NEAR(e.upper[0], 2.0, 1e-12);
  EXPECT_NEAR(e.upper[1], 2.0, 1e-12);
}

TEST(Ellipsoid, MonteCarloContainmentAndTightness) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 5; ++t) {
    const Matrix G = gaussian_matrix(rng, 3, 3);
    const Matrix Q = G * G.transpose() + 0.5 * Matrix::Identity(3, 3);
    const Vector b = gaussian_vector(rng, 3);
    const double eps = 2.0;
    const VarBounds vb = ellipsoid_bounds(Q, b, eps);
    // Grid over a box containing the ellipsoid; keep points inside it.
    const double R = 20.0;
    const int steps = 40;
    Vector hit_lo = Vector::Constant(3, kInf), hit_hi = Vector::Constant(3, -kInf);
    for (int a = 0; a <= steps; ++a)
      for (int c = 0; c <= steps; ++c)
        for (int d = 0; d <= steps; ++d) {
          const Vector x = b + R * vec({2.0 * a / steps - 1, 2.0 * c / steps - 1, 2.0 * d / steps - 1}) / 4.0;
          if ((x - b).dot(Q * (x - b)) > eps) continue;
          for (int i = 0; i < 3; ++i) {
            EXPECT_GE(x[i], vb.lower[i] - 1e-12);
            EXPECT_LE(x[i], vb.upper[i] + 1e-12);
            hit_lo[i] = std::min(hit_lo[i], x[i]);
            hit_hi[i] = std::max(hit_hi[i], x[i]);
          }
        }
    // The extreme point along e_i lies on the boundary.
    const Eigen::MatrixXd Qi = Eigen::MatrixXd(Q).inverse();
    for (int i = 0; i < 3; ++i) {
      const Vector dir = Qi.col(i) * std::sqrt(eps / Qi(i, i));
      EXPECT_NEAR(dir.dot(Q * dir), eps, 1e-9);
      EXPECT_NEAR(b[i] + dir[i], vb.upper[i], 1e-9);
    }
  }
}

TEST(Ellipsoid, RejectsSingular) {
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 1;
  EXPECT_THROW(ellipsoid_bounds(Q, Vector::Zero(2), 1.0), std::invalid_argument);
}

TEST(Tighten, IdentityCollapses) {
  const auto inst = make(Matrix::Identity(2, 2), vec({1, 1}), CardMin{});
  const TightenResult r = tighten_bounds(inst);
  ASSERT_EQ(r.status, TightenStatus::Bounded);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(r.bounds.lower[i], 1.0, 1e-9);
    EXPECT_NEAR(r.bounds.upper[i], 1.0, 1e-9);
  }
}

TEST(Tighten, SingleRowCardinalityCap) {
  const auto inst = make(mat(1, 2, {1, 1}), vec({2}), CardMin{});
  const TightenResult r = tighten_bounds(inst);
  ASSERT_EQ(r.status, TightenStatus::Bounded);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(r.bounds.lower[i], 0.0, 1e-6);
    EXPECT_NEAR(r.bounds.upper[i], 2.0, 1e-6);
  }
}

namespace {

// Shapes whose relaxed bound LPs stay bounded: a nullspace of dimension one.
std::vector<ProblemInstance> small_tighten_suite(std::mt19937_64& rng) {
  std::vector<ProblemInstance> out;
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  for (int t = 0; t < 6; ++t) {
    const int m = 1 + t % 2;
    Matrix A = gaussian_matrix(rng, m, m + 1);
    if (m == 1) A << pos(rng), pos(rng);
    out.push_back(make(A, A * sparse_signal(rng, m + 1, 1), CardMin{}));
  }
  return out;
}

}  // namespace

TEST(Tighten, SlowGrowthMatchesLargeStart) {
  std::mt19937_64 rng(8);
  int bounded = 0;
  for (const auto& inst : small_tighten_suite(rng)) {
    TightenOptions slow;
    slow.M0 = 0.05;
    slow.growth = 1.1;
    TightenOptions large;
    large.M0 = 1e4;
    const TightenResult a = tighten_bounds(inst, slow), b = tighten_bounds(inst, large);
    ASSERT_EQ(a.status, b.status);
    if (a.status != TightenStatus::Bounded) continue;
    ++bounded;
    EXPECT_GT(a.lp_solves, 0);
    for (int i = 0; i < inst.cols(); ++i) {
      EXPECT_NEAR(a.bounds.lower[i], b.bounds.lower[i], 1e-6);
      EXPECT_NEAR(a.bounds.upper[i], b.bounds.upper[i], 1e-6);
    }
  }
  EXPECT_GE(bounded, 3);
}

TEST(Tighten, ValidForAllSparseSolutions) {
  std::mt19937_64 rng(9);
  for (const auto& inst : small_tighten_suite(rng)) {
    const TightenResult r = tighten_bounds(inst);
    if (r.status != TightenStatus::Bounded) continue;
    const int m = inst.rows(), n = inst.cols();
    for_each_subset(n, m, [&](const IndexSet& S) {
      const Eigen::MatrixXd As = columns(inst.A, S);
      if (rank_of(As) < m) return;
      const Eigen::VectorXd xs = As.fullPivLu().solve(inst.b);
      for (int c = 0; c < m; ++c) {
        EXPECT_GE(xs[c], r.bounds.lower[S[c]] - 1e-6);
        EXPECT_LE(xs[c], r.bounds.upper[S[c]] + 1e-6);
      }
    });
  }
}

TEST(Tighten, ScaleFreeRelaxationReportsUnbounded) {
  std::mt19937_64 rng(8);
  const Matrix A = gaussian_matrix(rng, 2, 4);
  const auto inst = make(A, A * sparse_signal(rng, 4, 2), CardMin{});
  EXPECT_EQ(tighten_bounds(inst).status, TightenStatus::Unbounded);
  EXPECT_THROW(tighten_bounds(make(Matrix::Identity(2, 2), vec({1, 1}), CardMin{ResidualNorm::L2, 0.1})),
               std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Covering cuts

TEST(CoveringCut, Examples) {
  const Matrix A = mat(2, 3, {1, 0, 1, 0, 1, 1});
  const auto zero = separate_covering_cut(A, std::nullopt, Vector::Zero(3));
  ASSERT_TRUE(zero.has_value());
  EXPECT_EQ(zero->complement.size(), 1u);

  const auto cut = separate_covering_cut(A, std::nullopt, vec({1, 1, 0}));
  ASSERT_TRUE(cut.has_value());
  EXPECT_EQ(cut->complement, IndexSet({2}));

  EXPECT_THROW(separate_covering_cut(mat(2, 2, {1, 2, 2, 4}), std::nullopt, Vector::Zero(2)), std::invalid_argument);
}

TEST(CoveringCut, CircuitSupportsAreNeverCut) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    Matrix A = gaussian_matrix(rng, 2, 4);
    if (t % 2 == 0) A.col(3) = 2.0 * A.col(1);  // plant a 2-circuit
    for (int mask = 0; mask < 16; ++mask) {
      IndexSet S;
      Vector y = Vector::Zero(4);
      for (int j = 0; j < 4; ++j)
        if (mask >> j & 1) {
          S.push_back(j);
          y[j] = 1.0;
        }
      const bool dependent = rank_of(columns(A, S)) < static_cast<int>(S.size());
      const auto cut = separate_covering_cut(A, std::nullopt, y);
      if (dependent) EXPECT_FALSE(cut.has_value()) << "mask " << mask;
    }
  }
}

TEST(CoveringCut, CutsAreValidForEveryFeasibleSupport) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const int m = 3, n = 7;
    Matrix A = gaussian_matrix(rng, m, n);
    if (t % 3 == 0) A.col(5) = A.col(0) - A.col(2);
    const Vector b = A * sparse_signal(rng, n, 2);
    Vector y(n);
    for (int j = 0; j < n; ++j) y[j] = unit(rng) * 0.4;
    const auto cut = separate_covering_cut(A, b, y);
    if (!cut) continue;
    std::vector<bool> in_cut(n, false);
    for (int j : cut->complement) in_cut[j] = true;
    for (int s = 0; s <= n; ++s)
      for_each_subset(n, s, [&](const IndexSet& S) {
        if (restricted_ls_residual(A, b, S) > 1e-16 * std::max(1.0, b.squaredNorm())) return;
        bool meets = false;
        for (int j : S) meets = meets || in_cut[j];
        EXPECT_TRUE(meets);
      });
  }
}

// ---------------------------------------------------------------------------
// Exact solvers

TEST(Exact, TwoByTwoCardCons) {
  const double expected[] = {1.0, 0.8, 0.0};
  const Vector xs[] = {vec({0, 0}), vec({0, 0.2}), vec({-2, 1})};
  for (int k = 0; k <= 2; ++k) {
    const SolveReport r = solve_exact(prop_instance(CardCons{k}), methods::SupportBnB{});
    ASSERT_EQ(r.status, BnbStatus::Optimal);
    EXPECT_NEAR(r.solution.objective, expected[k], 1e-9) << "k=" << k;
    EXPECT_NEAR((r.solution.x - xs[k]).norm(), 0.0, 1e-9) << "k=" << k;
  }
}

TEST(Exact, TwoByTwoCardReg) {
  const SolveReport one = solve_exact(prop_instance(CardReg{1.0}), methods::SupportBnB{});
  EXPECT_NEAR(one.solution.objective, 1.0, 1e-9);
  EXPECT_NEAR(one.solution.x.norm(), 0.0, 1e-12);
  const SolveReport quarter = solve_exact(prop_instance(CardReg{0.25}), methods::SupportBnB{});
  EXPECT_NEAR(quarter.solution.objective, 2.0, 1e-9);
  EXPECT_NEAR((quarter.solution.x - vec({-2, 1})).norm(), 0.0, 1e-9);

  for (int g = 0; g <= 40; ++g) {
    const double lambda = std::pow(10.0, -2.0 + 0.1 * g);
    const SolveReport r = solve_exact(prop_instance(CardReg{lambda}), methods::SupportBnB{});
    const double value = std::min({2.0, 4.0 / (5.0 * lambda) + 1.0, 1.0 / lambda});
    EXPECT_NEAR(r.solution.objective, value, 1e-9) << lambda;
    EXPECT_NE(r.solution.support, IndexSet({1})) << lambda;
  }
}

TEST(Exact, PlantedTwoSparseAllMethods) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 8; ++t) {
    const Matrix A = gaussian_matrix(rng, 4, 8);
    const auto inst = make(A, A * sparse_signal(rng, 8, 2), CardMin{});
    const double truth = brute_force_objective(inst);
    ASSERT_EQ(truth, 2.0);
    for (const ExactMethod& m : {ExactMethod{methods::Covering{}}, ExactMethod{methods::SupportBnB{}},
                                 ExactMethod{methods::BigM{10.0}}}) {
      const SolveReport r = solve_exact(inst, m);
      EXPECT_EQ(r.status, BnbStatus::Optimal);
      EXPECT_EQ(r.solution.cardinality, 2);
      EXPECT_TRUE(is_feasible(inst, r.solution.x));
    }
  }
}

TEST(Exact, OracleEquivalenceAllKinds) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> mdist(3, 6), ndist(6, 10), kdist(1, 4);
  for (int t = 0; t < 40; ++t) {
    const int m = mdist(rng), n = ndist(rng);
    const Matrix A = gaussian_matrix(rng, m, n);
    const Vector planted = A * sparse_signal(rng, n, std::min(m - 1, kdist(rng)));
    const Vector noisy = planted + 0.1 * gaussian_vector(rng, m);
    std::vector<std::pair<ProblemInstance, std::vector<ExactMethod>>> cases = {
        {make(A, planted, CardMin{}), {methods::Covering{}, methods::SupportBnB{}, methods::BigM{1e3}}},
        {make(A, noisy, CardMin{ResidualNorm::L2, 0.3}), {methods::Covering{}, methods::SupportBnB{}}},
        {make(A, noisy, CardCons{kdist(rng)}), {methods::SupportBnB{}}},
        {make(A, noisy, CardReg{0.05 + 0.2 * (t % 5)}), {methods::SupportBnB{}}},
    };
    for (const auto& [inst, meths] : cases) {
      const double truth = brute_force_objective(inst);
      for (const auto& meth : meths) {
        const SolveReport r = solve_exact(inst, meth);
        ASSERT_EQ(r.status, BnbStatus::Optimal) << "trial " << t << " method " << meth.index();
        EXPECT_NEAR(r.solution.objective, truth, 1e-8) << "trial " << t << " method " << meth.index();
        EXPECT_TRUE(is_feasible(inst, r.solution.x));
        EXPECT_LE(r.lower_bound, r.solution.objective + 1e-8);
      }
    }
  }
}

TEST(Exact, RegularizedOptimaSolveInducedProblems) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 15; ++t) {
    const Matrix A = gaussian_matrix(rng, 4, 8);
    const Vector b = gaussian_vector(rng, 4);
    const SolveReport reg = solve_exact(make(A, b, CardReg{0.3 + 0.1 * t}), methods::SupportBnB{});
    const int s = reg.solution.cardinality;
    const double res = (A * reg.solution.x - b).norm();
    EXPECT_NEAR(brute_force_objective(make(A, b, CardCons{s})), res * res, 1e-8);
    EXPECT_EQ(brute_force_objective(make(A, b, CardMin{ResidualNorm::L2, res + 1e-9})), s);
  }
}

TEST(Exact, LinearResidualsAgreeAcrossMethods) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 10; ++t) {
    const Matrix A = gaussian_matrix(rng, 4, 7);
    const Vector b = A * sparse_signal(rng, 7, 3) + 0.05 * gaussian_vector(rng, 4);
    const ResidualNorm p = t % 2 ? ResidualNorm::L1 : ResidualNorm::Linf;
    const auto inst = make(A, b, CardMin{p, 0.2});
    const SolveReport cov = solve_exact(inst, methods::Covering{});
    const SolveReport big = solve_exact(inst, methods::BigM{1e3});
    ASSERT_EQ(cov.status, BnbStatus::Optimal);
    ASSERT_EQ(big.status, BnbStatus::Optimal);
    EXPECT_EQ(cov.solution.objective, big.solution.objective);
    EXPECT_TRUE(is_feasible(inst, cov.solution.x));
  }
}

TEST(Exact, InfeasibleAndEarlyStops) {
  const auto inst = make(mat(2, 2, {1, 0, 1, 0}), vec({1, 2}), CardMin{ResidualNorm::L2, 0.1});
  EXPECT_EQ(solve_exact(inst, methods::SupportBnB{}).status, BnbStatus::Infeasible);
  EXPECT_EQ(solve_exact(inst, methods::Covering{}).status, BnbStatus::Infeasible);

  std::mt19937_64 rng(16);
  const Matrix A = gaussian_matrix(rng, 6, 12);
  const auto hard = make(A, gaussian_vector(rng, 6), CardCons{3});
  BnbConfig cfg;
  cfg.max_nodes = 3;
  const SolveReport r = solve_exact(hard, methods::SupportBnB{}, cfg);
  const double truth = brute_force_objective(hard);
  EXPECT_EQ(r.status, BnbStatus::NodeLimit);
  EXPECT_LE(r.lower_bound, truth + 1e-9);
  if (r.has_incumbent) EXPECT_GE(r.solution.objective, truth - 1e-9);
}

// ---------------------------------------------------------------------------
// LP export

namespace {

// Minimal reader for the exported layout, used for the round trip.
MilpModel parse_lp(const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  std::map<std::string, int> index;
  std::vector<std::pair<std::map<std::string, double>, std::pair<std::string, double>>> rows;
  std::map<std::string, double> obj;
  std::map<std::string, std::pair<double, double>> bnd;
  std::vector<std::string> binaries, order;
  auto var = [&](const std::string& v) {
    if (!index.count(v)) {
      index[v] = static_cast<int>(order.size());
      order.push_back(v);
    }
  };
  auto linear = [&](std::istringstream& ss, std::map<std::string, double>& out, std::string& tail) {
    std::string tok;
    double sign = 1.0;
    while (ss >> tok) {
      if (tok == "+") sign = 1.0;
      else if (tok == "-") sign = -1.0;
      else if (tok == "<=" || tok == ">=" || tok == "=") {
        tail = tok;
        return;
      } else {
        const double c = std::stod(tok);
        std::string name;
        ss >> name;
        if (name.empty()) return;
        var(name);
        out[name] += sign * c;
        sign = 1.0;
      }
    }
  };
  while (std::getline(in, line)) {
    if (line == "Minimize" || line == "Subject To" || line == "Bounds" || line == "Binary" || line == "End") {
      section = line;
      continue;
    }
    std::istringstream ss(line);
    if (section == "Minimize") {
      std::string label, tail;
      ss >> label;
      linear(ss, obj, tail);
    } else if (section == "Subject To") {
      std::string label, rel;
      ss >> label;
      std::map<std::string, double> coeffs;
      linear(ss, coeffs, rel);
      double rhs;
      ss >> rhs;
      rows.push_back({coeffs, {rel, rhs}});
    } else if (section == "Bounds") {
      std::vector<std::string> tok;
      for (std::string s; ss >> s;) tok.push_back(s);
      auto num = [](const std::string& s) { return s == "+inf" ? kInf : s == "-inf" ? -kInf : std::stod(s); };
      if (tok.size() == 2) bnd[tok[0]] = {-kInf, kInf};
      else if (tok.size() == 3 && tok[1] == "<=" && std::isalpha(tok[0][0])) bnd[tok[0]] = {0.0, num(tok[2])};
      else if (tok.size() == 3) bnd[tok[2]] = {num(tok[0]), kInf};
      else bnd[tok[2]] = {num(tok[0]), num(tok[4])};
      var(tok.size() == 2 || std::isalpha(tok[0][0]) ? tok[0] : tok[2]);
    } else if (section == "Binary") {
      std::string v;
      ss >> v;
      var(v);
      binaries.push_back(v);
    }
  }
  MilpModel model;
  model.base = LpModel(static_cast<int>(order.size()));
  for (const auto& [v, c] : obj) model.base.objective[index[v]] = c;
  for (const auto& [v, lu] : bnd) {
    model.base.lower[index[v]] = lu.first;
    model.base.upper[index[v]] = lu.second;
  }
  for (const auto& v : binaries) {
    model.integral.push_back(index[v]);
    model.base.upper[index[v]] = 1.0;
  }
  for (const auto& [coeffs, relrhs] : rows) {
    Vector row = Vector::Zero(model.base.num_vars());
    for (const auto& [v, c] : coeffs) row[index[v]] = c;
    const Relation rel = relrhs.first == "<=" ? Relation::LessEq : relrhs.first == ">=" ? Relation::GreaterEq : Relation::Equal;
    model.base.add_row(row, rel, relrhs.second);
  }
  return model;
}

}  // namespace

TEST(ExportLp, Examples) {
  EXPECT_EQ(export_lp_file(MilpModel{LpModel(0), {}}), "Minimize\n obj: 0\nSubject To\nEnd");

  MilpModel one{LpModel(1), {}};
  one.base.objective[0] = 1.0;
  one.base.lower[0] = 1.0;
  const std::string text = export_lp_file(one);
  EXPECT_NE(text.find("Bounds\n 1 <= x1"), std::string::npos) << text;
  EXPECT_EQ(text.substr(0, 20), "Minimize\n obj: 1 x1\n");
}

TEST(ExportLp, BigMLayoutAndPrecision) {
  const auto inst = make(mat(1, 2, {1.0 / 3.0, -2}), vec({4}), CardMin{});
  const std::string text = export_lp_file(build_bigm_cardmin(inst, 10.0));
  EXPECT_NE(text.find(" obj: 1 y1 + 1 y2"), std::string::npos) << text;
  EXPECT_NE(text.find(" c1: 0.333333333333 x1 - 2 x2 = 4"), std::string::npos) << text;
  EXPECT_NE(text.find(" c2: 1 x1 - 10 y1 <= 0"), std::string::npos) << text;
  EXPECT_NE(text.find(" c3: 1 x1 + 10 y1 >= 0"), std::string::npos) << text;
  EXPECT_NE(text.find(" x1 free"), std::string::npos);
  EXPECT_NE(text.find("Binary\n y1\n y2\nEnd"), std::string::npos);
}

TEST(ExportLp, RoundTripMatchesBigM) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 5; ++t) {
    const Matrix A = gaussian_matrix(rng, 3, 6);
    const auto inst = make(A, A * sparse_signal(rng, 6, 2), CardMin{});
    const MilpModel built = build_bigm_cardmin(inst, 10.0);
    const MilpModel parsed = parse_lp(export_lp_file(built));
    ASSERT_EQ(parsed.base.num_vars(), built.base.num_vars());
    ASSERT_EQ(parsed.base.num_rows(), built.base.num_rows());
    MilpAdapter<true> adapter(parsed);
    const SolveReport plain = run(adapter);
    const SolveReport ref = solve_exact(inst, methods::BigM{10.0});
    ASSERT_EQ(plain.status, BnbStatus::Optimal);
    EXPECT_NEAR(plain.solution.objective, ref.solution.objective, 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Reduced rank and portfolio

TEST(ReducedRank, Examples) {
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 4;
  Q(1, 1) = 1;
  const ReducedRank rr = reduced_rank(Q, 1);
  ASSERT_EQ(rr.omegas.size(), 1);
  EXPECT_NEAR(rr.omegas[0], 4.0, 1e-12);
  EXPECT_NEAR(rr.rho[0], 0.0, 1e-12);
  EXPECT_NEAR(rr.rho[1], 1.0, 1e-12);

  Matrix bad = Q;
  bad(0, 1) = 1.0;
  EXPECT_THROW(reduced_rank(bad, 1), std::invalid_argument);
}

TEST(ReducedRank, ResidualsAndTraceIdentity) {
  std::mt19937_64 rng(18);
  for (int t = 0; t < 30; ++t) {
    const int n = 3 + t % 8;
    const Matrix G = gaussian_matrix(rng, n, n);
    const Matrix Q = G * G.transpose();
    for (int H = 0; H <= n; ++H) {
      const ReducedRank rr = reduced_rank(Q, H);
      EXPECT_GE(rr.rho.minCoeff(), -1e-10);
      EXPECT_NEAR(rr.rho.sum(), Q.trace() - rr.omegas.sum(), 1e-8 * std::max(1.0, Q.trace()));
      if (H == n) EXPECT_LE(rr.rho.cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

namespace {

PortfolioInstance long_only(const Matrix& Q, const Vector& mu, int k) {
  const int n = static_cast<int>(mu.size());
  PortfolioInstance p;
  p.Q = Q;
  p.mu = mu;
  p.k = k;
  p.theta_plus = p.theta_minus = Vector::Zero(n);
  p.u_plus = Vector::Ones(n);
  p.u_minus = Vector::Zero(n);
  p.exposure.long_min = p.exposure.long_max = 1.0;
  p.exposure.short_max = 0.0;
  return p;
}

PortfolioInstance long_short(std::mt19937_64& rng, int n, int k) {
  const Matrix G = gaussian_matrix(rng, n, n);
  PortfolioInstance p;
  p.Q = G * G.transpose() / n + 0.05 * Matrix::Identity(n, n);
  p.mu = 0.5 * gaussian_vector(rng, n);
  p.lambda = 1.0;
  p.k = k;
  p.theta_plus = Vector::Constant(n, 0.1);
  p.theta_minus = Vector::Constant(n, 0.05);
  p.u_plus = Vector::Constant(n, 0.6);
  p.u_minus = Vector::Constant(n, 0.3);
  p.exposure = {0.8, 1.2, 0.0, 0.4};
  return p;
}

}  // namespace

TEST(Portfolio, SymmetricTwoAssets) {
  const PortfolioInstance p = long_only(2.0 * Matrix::Identity(2, 2), vec({1, 1}), 2);
  const SolveReport r = solve_portfolio(p);
  ASSERT_EQ(r.status, BnbStatus::Optimal);
  EXPECT_NEAR(r.solution.x[0], 0.5, 1e-6);
  EXPECT_NEAR(r.solution.x[1], 0.5, 1e-6);
  EXPECT_NEAR(r.solution.objective, 0.0, 1e-9);
}

TEST(Portfolio, BestSingleAsset) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 5; ++t) {
    const Matrix G = gaussian_matrix(rng, 3, 3);
    const PortfolioInstance p = long_only(G * G.transpose() + 0.1 * Matrix::Identity(3, 3), gaussian_vector(rng, 3), 1);
    double best = kInf;
    for (int j = 0; j < 3; ++j) best = std::min(best, p.lambda * p.Q(j, j) - p.mu[j]);
    const SolveReport r = solve_portfolio(p);
    ASSERT_EQ(r.status, BnbStatus::Optimal);
    EXPECT_NEAR(r.solution.objective, best, 1e-6);
    EXPECT_LE(r.solution.cardinality, 1);
  }
}

TEST(Portfolio, LongShortMatchesEnumeration) {
  std::mt19937_64 rng(20);
  for (int t = 0; t < 6; ++t) {
    const int n = t < 3 ? 3 : 6;
    const PortfolioInstance p = long_short(rng, n, 2 + t % 2);
    const PortfolioOracle truth = portfolio_enumerate(p);
    const SolveReport r = solve_portfolio(p);
    if (!std::isfinite(truth.value)) {
      EXPECT_EQ(r.status, BnbStatus::Infeasible);
      continue;
    }
    ASSERT_EQ(r.status, BnbStatus::Optimal) << t;
    EXPECT_NEAR(r.solution.objective, truth.value, 1e-6) << t;
    EXPECT_LE(r.lower_bound, truth.value + 1e-9);
    EXPECT_LE(r.solution.cardinality, p.k);
  }
}

TEST(Portfolio, NodeBoundsAreSound) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int t = 0; t < 10; ++t) {
    const PortfolioInstance p = long_short(rng, 3, 2);
    PortfolioAdapter adapter(p, std::nullopt);
    for (int s = 0; s < 8; ++s) {
      auto state = adapter.root();
      std::vector<int> fixed(3, 0);
      for (int j = 0; j < 3; ++j) {
        fixed[j] = pick(rng);
        state.side[j] = static_cast<PortfolioAdapter::Side>(fixed[j]);
        if (fixed[j] == 1 || fixed[j] == 2) ++state.decided_active;
      }
      const auto e = adapter.evaluate(state);
      const PortfolioOracle truth = portfolio_enumerate(p, fixed);
      if (e.infeasible) continue;
      EXPECT_LE(e.bound, truth.value + 1e-9);
    }
  }
}

TEST(Portfolio, ReducedRankObjective) {
  std::mt19937_64 rng(22);
  PortfolioInstance p = long_short(rng, 5, 2);
  p.H = 2;
  const ReducedRank rr = reduced_rank(p.Q, 2);
  Eigen::MatrixXd Qr = rr.VH.transpose() * rr.omegas.asDiagonal() * rr.VH;
  Qr.diagonal() += rr.rho;
  const PortfolioOracle truth = portfolio_enumerate(p, {}, &Qr);
  const SolveReport r = solve_portfolio(p);
  ASSERT_EQ(r.status, BnbStatus::Optimal);
  EXPECT_NEAR(r.solution.objective, truth.value, 1e-6);
}

TEST(Portfolio, Rejections) {
  PortfolioInstance p = long_only(Matrix::Identity(2, 2), vec({1, 1}), 2);
  p.exposure.long_min = p.exposure.long_max = 5.0;
  EXPECT_EQ(solve_portfolio(p).status, BnbStatus::Infeasible);

  PortfolioInstance q = long_only(Matrix::Identity(2, 2), vec({1, 1}), 2);
  q.Q(0, 0) = -1.0;
  EXPECT_THROW(solve_portfolio(q), std::invalid_argument);

  PortfolioInstance r = long_only(Matrix::Identity(2, 2), vec({1, 1}), 3);
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r.k = 1;
  r.theta_plus[0] = 2.0;
  EXPECT_THROW(r.validate(), std::invalid_argument);
}

TEST(Portfolio, StudyConfigurationShape) {
  const int n = 741;
  std::mt19937_64 rng(23);
  const Matrix F = gaussian_matrix(rng, n, 5);
  PortfolioInstance p;
  p.Q = F * F.transpose() / 100.0;
  p.Q.diagonal().array() += 0.01;
  p.mu = Vector::Constant(n, 0.001);
  p.k = 50;
  p.theta_plus = p.theta_minus = Vector::Constant(n, 0.01);
  p.u_plus = Vector::Constant(n, 0.5);
  p.u_minus = Vector::Constant(n, 0.2);
  p.exposure = {0.4, 0.5, 0.0, 0.2};
  p.H = 250;
  EXPECT_NO_THROW(p.validate());
}
