#include "cardopt/core.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace cardopt;
namespace ts = testing_support;

TEST(SupportOf, ExamplesFromContract) {
  auto s0 = support_of(Vector::Zero(3));
  EXPECT_TRUE(s0.empty());

  Vector x1(2);
  x1 << 0.0, 0.2;
  EXPECT_EQ(support_of(x1), IndexSet({1}));
  EXPECT_EQ(cardinality(x1), 1);

  Vector x2(2);
  x2 << 1e-12, 1.0;
  EXPECT_EQ(support_of(x2), IndexSet({1}));
  EXPECT_THROW(support_of(x2, -1.0), std::invalid_argument);
}

TEST(Norm, Values) {
  Vector a(2);
  a << 3, -4;
  EXPECT_DOUBLE_EQ(norm(a, norms::L2{}), 5.0);
  EXPECT_DOUBLE_EQ(norm(a, norms::L1{}), 7.0);
  EXPECT_DOUBLE_EQ(norm(a, norms::Linf{}), 4.0);
  EXPECT_DOUBLE_EQ(norm(a, norms::L0{}), 2.0);

  Vector x(3);
  x << 3, -1, 2;
  // Oracle: best 2-subset sum by enumeration.
  double best = 0.0;
  ts::for_each_subset(3, 2, [&](const IndexSet& s) {
    best = std::max(best, std::abs(x[s[0]]) + std::abs(x[s[1]]));
  });
  EXPECT_DOUBLE_EQ(best, 5.0);
  EXPECT_DOUBLE_EQ(norm(x, norms::Largest{2, 1}), best);
  EXPECT_DOUBLE_EQ(norm(x, norms::Largest{3, 1}), 6.0);
  EXPECT_DOUBLE_EQ(norm(x, norms::Largest{2, 2}), std::sqrt(13.0));
}

TEST(Norm, DcIdentityOnIntegerVectors) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> val(-3, 3);
  std::uniform_int_distribution<int> len(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = len(rng);
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = (val(rng) % 2 == 0) ? 0.0 : val(rng);
    for (int k = 0; k <= n; ++k) {
      const bool sparse = norm(x, norms::L0{0.0}) <= k;
      const double dc = norm(x, norms::L1{}) - norm(x, norms::Largest{k, 1});
      EXPECT_EQ(sparse, dc == 0.0) << "k=" << k;
    }
  }
}

TEST(Threshold, Examples) {
  Vector x(3);
  x << 3, -0.5, 1;
  Vector soft = threshold(x, thresholds::Soft{1.0});
  EXPECT_EQ(soft, Vector::Map(std::vector<double>{2, 0, 0}.data(), 3));
  EXPECT_EQ(threshold(x, thresholds::Soft{0.0}), x);

  Vector y(3);
  y << 3, -5, 1;
  Vector top = threshold(y, thresholds::TopK{1});
  EXPECT_EQ(top, Vector::Map(std::vector<double>{0, -5, 0}.data(), 3));

  Vector h = threshold(y, thresholds::Hard{2.0});
  EXPECT_EQ(h, Vector::Map(std::vector<double>{3, -5, 0}.data(), 3));
}

TEST(Threshold, TopKTiesKeepLowestIndex) {
  Vector x(4);
  x << 1, -2, 2, -2;
  Vector out = threshold(x, thresholds::TopK{2});
  EXPECT_EQ(support_of(out), IndexSet({1, 2}));
}

TEST(Threshold, SoftShrinksAndKeepsSigns) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> alpha(0.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    Vector x = ts::gaussian_vector(rng, 7);
    const double a = alpha(rng);
    Vector z = threshold(x, thresholds::Soft{a});
    EXPECT_LE(z.lpNorm<1>(), x.lpNorm<1>() + 1e-15);
    for (int i = 0; i < 7; ++i)
      if (z[i] != 0.0) EXPECT_EQ(std::signbit(z[i]), std::signbit(x[i]));
  }
}

TEST(ProjectL1Ball, Examples) {
  Vector inside(2);
  inside << 0.3, -0.2;
  EXPECT_EQ(project_l1_ball(inside, 1.0), inside);

  Vector a(2);
  a << 2, 0;
  EXPECT_NEAR((project_l1_ball(a, 1.0) - Vector::Unit(2, 0)).norm(), 0.0, 1e-15);

  Vector b = Vector::Ones(2);
  Vector pb = project_l1_ball(b, 1.0);
  EXPECT_NEAR(pb[0], 0.5, 1e-15);
  EXPECT_NEAR(pb[1], 0.5, 1e-15);
  EXPECT_TRUE(project_l1_ball(b, 0.0).isZero());
}

// Grid oracle: search the l1 ball boundary in 2-D and 3-D directly.
TEST(ProjectL1Ball, MatchesGridOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tau_d(0.1, 2.0);
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + t % 2;
    Vector x = 2.0 * ts::gaussian_vector(rng, n);
    const double tau = tau_d(rng);
    Vector z = project_l1_ball(x, tau);
    EXPECT_LE(z.lpNorm<1>(), tau + 1e-10);

    double best = (x - z).norm();
    const int steps = n == 2 ? 4000 : 300;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= (n == 2 ? 0 : steps); ++j) {
        Vector c(n);
        if (n == 2) {
          const double a = tau * (2.0 * i / steps - 1.0);
          const double rem = tau - std::abs(a);
          for (double s : {-1.0, 1.0}) {
            c << a, s * rem;
            best = std::min(best, (x - c).norm());
          }
        } else {
          const double a = tau * (2.0 * i / steps - 1.0);
          const double rem = tau - std::abs(a);
          const double bcoord = rem * (2.0 * j / steps - 1.0);
          const double rest = rem - std::abs(bcoord);
          for (double s : {-1.0, 1.0}) {
            c << a, bcoord, s * rest;
            best = std::min(best, (x - c).norm());
          }
        }
      }
    }
    EXPECT_GE(best, (x - z).norm() - 1e-6);
    EXPECT_LE((x - z).norm(), best + (n == 2 ? 1e-3 : 2e-2));
  }
}

TEST(EighSym, Examples) {
  auto e = eigh_sym(Matrix::Identity(3, 3));
  EXPECT_NEAR((e.values - Vector::Ones(3)).norm(), 0.0, 1e-14);

  Matrix Q(2, 2);
  Q << 2, 1, 1, 2;
  auto e2 = eigh_sym(Q);
  // Roots of (2-w)^2 - 1.
  EXPECT_NEAR(e2.values[0], 3.0, 1e-12);
  EXPECT_NEAR(e2.values[1], 1.0, 1e-12);

  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 5;
  D(1, 1) = 2;
  auto e3 = eigh_sym(D);
  EXPECT_NEAR(e3.values[0], 5.0, 1e-15);
  EXPECT_NEAR(e3.values[1], 2.0, 1e-15);
  EXPECT_NEAR(e3.vectors.cwiseAbs().diagonal().sum(), 2.0, 1e-14);

  Matrix bad(2, 2);
  bad << 1, 2, 0, 1;
  EXPECT_THROW(eigh_sym(bad), std::invalid_argument);
}

TEST(EighSym, RandomReconstructionAgainstEigen) {
  std::mt19937_64 rng(17);
  for (int n : {1, 2, 5, 13, 30, 50}) {
    Matrix G = ts::gaussian_matrix(rng, n, n);
    Matrix Q = G + G.transpose();
    auto e = eigh_sym(Q);
    const Matrix V = e.vectors;
    const Matrix rec = V * e.values.asDiagonal() * V.transpose();
    EXPECT_LE((rec - Q).norm(), 1e-8) << n;
    EXPECT_LE((V.transpose() * V - Matrix::Identity(n, n)).norm(), 1e-8) << n;
    for (int i = 0; i + 1 < n; ++i) EXPECT_GE(e.values[i], e.values[i + 1]);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(Q);
    Eigen::VectorXd expect = ref.eigenvalues().reverse();
    EXPECT_LE((e.values - expect).norm(), 1e-9) << n;
  }
}

TEST(Rank, MatchesFullPivLU) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 50; ++t) {
    const int m = 2 + t % 5, n = 3 + t % 6, r = 1 + t % std::min(m, n);
    Matrix M = ts::gaussian_matrix(rng, m, r) * ts::gaussian_matrix(rng, r, n);
    EXPECT_EQ(matrix_rank(M), ts::rank_of(M));
  }
  EXPECT_EQ(matrix_rank(Matrix::Zero(3, 3)), 0);
}

TEST(Instance, Validation) {
  ProblemInstance inst;
  inst.A = Matrix::Identity(2, 2);
  inst.b = Vector::Ones(2);
  inst.kind = CardCons{3};
  EXPECT_THROW(inst.validate(), std::invalid_argument);
  inst.kind = CardReg{0.0};
  EXPECT_THROW(inst.validate(), std::invalid_argument);
  inst.kind = CardMin{ResidualNorm::L2, 2.0};
  EXPECT_THROW(inst.validate(), std::invalid_argument);
  inst.kind = CardMin{ResidualNorm::L2, 0.5};
  EXPECT_NO_THROW(inst.validate());
  inst.b = Vector::Ones(3);
  EXPECT_THROW(inst.validate(), std::invalid_argument);
}

TEST(Instance, ObjectiveValues) {
  ProblemInstance inst;
  inst.A.resize(2, 2);
  inst.A << 0, 1, 1, 2;
  inst.b = Vector::Unit(2, 0);
  Vector x(2);
  x << 0, 0.2;
  inst.kind = CardCons{1};
  EXPECT_NEAR(objective_value(inst, x), 0.8, 1e-15);
  inst.kind = CardReg{1.0};
  EXPECT_NEAR(objective_value(inst, x), 1.8, 1e-15);
  inst.kind = CardMin{};
  EXPECT_EQ(objective_value(inst, x), 1.0);
  EXPECT_FALSE(is_feasible(inst, x));

  auto sol = make_solution(inst, x, SolveStatus::Feasible);
  EXPECT_EQ(sol.cardinality, static_cast<int>(sol.support.size()));
}
