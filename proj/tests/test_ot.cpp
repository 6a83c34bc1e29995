#include <gtest/gtest.h>

#include <random>

#include "ot_oracle.hpp"
#include "scgmm/error.hpp"
#include "scgmm/ot.hpp"
#include "test_util.hpp"

namespace scgmm {
namespace {

Eigen::MatrixXd mat(int rows, int cols, std::initializer_list<double> values) {
  Eigen::MatrixXd m(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = *it++;
  }
  return m;
}

void expect_marginals(const Eigen::MatrixXd& plan, const std::vector<double>& w,
                      const std::vector<double>* v) {
  EXPECT_GE(plan.minCoeff(), 0.0);
  for (Eigen::Index i = 0; i < plan.rows(); ++i) EXPECT_NEAR(plan.row(i).sum(), w[i], 1e-9);
  if (v) {
    for (Eigen::Index j = 0; j < plan.cols(); ++j) EXPECT_NEAR(plan.col(j).sum(), (*v)[j], 1e-9);
  }
}

TEST(Ot, IdentityTransport) {
  const std::vector<double> w{0.2, 0.5, 0.3};
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(3, 3, 1.0);
  cost.diagonal().setZero();
  const ot::TransportPlan p = ot::solve_ot(cost, w, w);
  EXPECT_NEAR(p.objective, 0.0, 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p.plan(i, i), w[i], 1e-15);
}

TEST(Ot, WorkedExamples) {
  const std::vector<double> w{0.4, 0.6};
  {
    const ot::TransportPlan p = ot::solve_ot(mat(2, 2, {0, 25.0 / 9, 4, 1.0 / 9}), w, w);
    EXPECT_NEAR(p.plan(0, 0), 0.4, 1e-12);
    EXPECT_NEAR(p.plan(1, 1), 0.6, 1e-12);
    EXPECT_NEAR(p.plan(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(p.objective, 0.6 / 9, 1e-12);
  }
  {
    const std::vector<double> v{0.5, 0.5};
    const ot::TransportPlan p = ot::solve_ot(mat(2, 2, {0, 4, 4, 0}), w, v);
    EXPECT_NEAR(p.plan(0, 0), 0.4, 1e-12);
    EXPECT_NEAR(p.plan(1, 0), 0.1, 1e-12);
    EXPECT_NEAR(p.plan(1, 1), 0.5, 1e-12);
    EXPECT_NEAR(p.objective, 0.4, 1e-12);
  }
}

TEST(Ot, MatchesVertexEnumeration) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int inst = 0; inst < 500; ++inst) {
    const int m = 1 + inst % 3;
    const int n = 1 + (inst / 3) % 3;
    Eigen::MatrixXd cost(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        // Some instances use small integer costs to force ties.
        cost(i, j) = inst % 2 ? std::floor(u(rng)) : u(rng);
      }
    }
    std::vector<double> w = testing::random_simplex(m, rng);
    std::vector<double> v = testing::random_simplex(n, rng);
    if (inst % 5 == 0 && m == n) v = w;  // degenerate: equal marginals
    const ot::TransportPlan p = ot::solve_ot(cost, w, v);
    expect_marginals(p.plan, w, &v);
    EXPECT_NEAR(p.objective, (p.plan.array() * cost.array()).sum(), 1e-12);
    EXPECT_NEAR(p.objective, testing::vertex_enumeration_ot(cost, w, v), 1e-10)
        << "instance " << inst;
  }
}

TEST(Ot, ZeroMassRowsAndColumns) {
  const std::vector<double> w{0.5, 0.0, 0.5};
  const std::vector<double> v{0.0, 0.3, 0.7};
  const Eigen::MatrixXd cost = mat(3, 3, {1, 2, 3, 0, 0, 0, 3, 1, 2});
  const ot::TransportPlan p = ot::solve_ot(cost, w, v);
  expect_marginals(p.plan, w, &v);
  EXPECT_EQ(p.plan.row(1).sum(), 0.0);
  EXPECT_EQ(p.plan.col(0).sum(), 0.0);
  EXPECT_NEAR(p.objective, testing::vertex_enumeration_ot(cost, w, v), 1e-12);
}

TEST(Ot, LargerInstancesSatisfyOptimalityConditions) {
  // Complementary slackness: a plan is optimal iff some potentials u, v
  // satisfy u_i + v_j <= c_ij everywhere with equality on the support.
  // Checked here through weak duality against a perturbed feasible plan.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int inst = 0; inst < 20; ++inst) {
    const int m = 20 + inst, n = 5;
    Eigen::MatrixXd cost(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) cost(i, j) = u(rng);
    }
    const auto w = testing::random_simplex(m, rng);
    const auto v = testing::random_simplex(n, rng);
    const ot::TransportPlan p = ot::solve_ot(cost, w, v);
    expect_marginals(p.plan, w, &v);
    // The independent coupling is feasible, so it cannot be cheaper.
    double product = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) product += w[i] * v[j] * cost(i, j);
    }
    EXPECT_LE(p.objective, product + 1e-12);
    // Row-argmin is a lower bound.
    EXPECT_GE(p.objective, ot::relaxed_plan(cost, w).objective - 1e-12);
  }
}

TEST(Ot, RejectsInvalidInput) {
  const std::vector<double> ok{0.5, 0.5};
  const std::vector<double> bad{0.5, 0.6};
  const Eigen::MatrixXd cost = mat(2, 2, {0, 1, 1, 0});
  EXPECT_THROW(ot::solve_ot(cost, bad, ok), InvalidArgument);
  EXPECT_THROW(ot::solve_ot(cost, ok, bad), InvalidArgument);
  EXPECT_THROW(ot::solve_ot(mat(2, 2, {0, -1, 1, 0}), ok, ok), InvalidArgument);
  EXPECT_THROW(ot::solve_ot(mat(2, 2, {0, NAN, 1, 0}), ok, ok), InvalidArgument);
  const std::vector<double> three{0.2, 0.3, 0.5};
  EXPECT_THROW(ot::solve_ot(cost, three, ok), InvalidArgument);
}

TEST(Ot, RelaxedPlanExamples) {
  const std::vector<double> w{0.4, 0.6};
  const ot::TransportPlan p = ot::relaxed_plan(mat(2, 2, {0, 1, 2, 0.5}), w);
  EXPECT_EQ(p.plan, mat(2, 2, {0.4, 0, 0, 0.6}));
  EXPECT_NEAR(p.objective, 0.3, 1e-15);

  const std::vector<double> one{1.0};
  const ot::TransportPlan tie = ot::relaxed_plan(mat(1, 3, {2, 2, 2}), one);
  EXPECT_EQ(tie.plan(0, 0), 1.0);
  EXPECT_EQ(tie.plan.sum(), 1.0);
}

TEST(Ot, RelaxedPlanIsTheInfimumOverTargetMarginals) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int inst = 0; inst < 50; ++inst) {
    const Eigen::MatrixXd cost = mat(2, 2, {u(rng), u(rng), u(rng), u(rng)});
    // Source marginal on the grid, so the optimal target marginal is too.
    const double w0 = static_cast<int>(u(rng) / 3.0 * 1000) * 1e-3;
    const std::vector<double> w{w0, 1.0 - w0};
    const double relaxed = ot::relaxed_plan(cost, w).objective;
    double best = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 1000; ++step) {
      const double a = step * 1e-3;
      const std::vector<double> v{a, 1.0 - a};
      const double value = ot::solve_ot(cost, w, v).objective;
      EXPECT_GE(value, relaxed - 1e-12);
      best = std::min(best, value);
    }
    EXPECT_NEAR(best, relaxed, 1e-6);
  }
}

}  // namespace
}  // namespace scgmm
