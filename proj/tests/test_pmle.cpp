#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "scgmm/error.hpp"
#include "scgmm/metrics.hpp"
#include "scgmm/pmle.hpp"
#include "test_util.hpp"

namespace scgmm {
namespace {

using testing::g1;
using testing::mix1;
using std::numbers::pi;

Eigen::MatrixXd column(std::vector<double> xs) {
  Eigen::MatrixXd m(xs.size(), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) m(i, 0) = xs[i];
  return m;
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff();
}

// Scalar EM step for 1-d mixtures, written from the update formulas with
// plain loops.
std::vector<std::array<double, 3>> scalar_em_step(
    const std::vector<std::array<double, 3>>& g, const std::vector<double>& x,
    double a) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  s /= n;
  std::vector<std::vector<double>> r(n, std::vector<double>(g.size()));
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto [w, mu, var] = g[k];
      r[i][k] = w * std::exp(-0.5 * (x[i] - mu) * (x[i] - mu) / var) / std::sqrt(2 * pi * var);
      total += r[i][k];
    }
    for (double& v : r[i]) v /= total;
  }
  std::vector<std::array<double, 3>> out;
  for (std::size_t k = 0; k < g.size(); ++k) {
    double nk = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nk += r[i][k];
      sx += r[i][k] * x[i];
    }
    const double mu = sx / nk;
    double sk = 0.0;
    for (std::size_t i = 0; i < n; ++i) sk += r[i][k] * (x[i] - mu) * (x[i] - mu);
    out.push_back({nk / n, mu, (2 * a * s + sk) / (2 * a + nk)});
  }
  return out;
}

TEST(Pmle, SampleCovarianceUsesDivisorN) {
  const Eigen::MatrixXd x = column({-1, 0, 1});
  EXPECT_NEAR(sample_covariance(x)(0, 0), 2.0 / 3.0, 1e-15);
}

TEST(Pmle, PenalizedLoglikExamples) {
  const Eigen::MatrixXd x = column({-1, 0, 1});
  const Eigen::MatrixXd s = sample_covariance(x);
  const Mixture g({1.0}, {g1(0, 1)});
  const double a = 1.0 / std::sqrt(3.0);
  const double loglik = -1.5 * std::log(2 * pi) - 0.5 * (1 + 0 + 1);
  EXPECT_NEAR(penalized_loglik(g, x, a, s), loglik - a * (2.0 / 3.0 + 0.0), 1e-12);
  EXPECT_NEAR(penalized_loglik(g, x, 0.0, s), loglik, 1e-12);

  std::mt19937_64 rng(2);
  const Eigen::MatrixXd data = testing::random_mixture(2, 3, rng).sample(50, 1).points;
  const Eigen::MatrixXd s3 = sample_covariance(data);
  const Gaussian at_s(data.colwise().mean().transpose(), s3);
  const Mixture one({1.0}, {at_s});
  const double plain = penalized_loglik(one, data, 0.0, s3);
  EXPECT_NEAR(penalized_loglik(one, data, 0.3, s3),
              plain - 0.3 * (3.0 + at_s.log_det()), 1e-9);
}

TEST(Pmle, EmStepMatchesScalarOracle) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<double> xs(40);
    for (double& v : xs) v = normal(rng);
    std::vector<std::array<double, 3>> g{{0.3, -1.0, 0.7}, {0.5, 0.4, 1.2}, {0.2, 2.0, 0.4}};
    const double a = 0.1 * (inst + 1);
    const Eigen::MatrixXd x = column(xs);
    const Mixture start = mix1({0.3, 0.5, 0.2}, {{-1.0, 0.7}, {0.4, 1.2}, {2.0, 0.4}});
    const Mixture next = em_step(start, x, a, sample_covariance(x));
    const auto oracle = scalar_em_step(g, xs, a);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(next.weight(k), oracle[k][0], 1e-12);
      EXPECT_NEAR(next.component(k).mean()[0], oracle[k][1], 1e-12);
      EXPECT_NEAR(next.component(k).cov()(0, 0), oracle[k][2], 1e-12);
    }
  }
}

TEST(Pmle, SingleComponentFixedPoint) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd data = testing::random_mixture(3, 2, rng).sample(300, 2).points;
  const Eigen::MatrixXd s = sample_covariance(data);
  const Mixture start({1.0}, {testing::random_gaussian(2, rng, 4.0)});
  const Mixture next = em_step(start, data, 0.05, s);
  EXPECT_LE((next.component(0).mean() - data.colwise().mean().transpose()).norm(), 1e-12);
  EXPECT_LE((next.component(0).cov() - s).cwiseAbs().maxCoeff(), 1e-12);

  PmleConfig cfg;
  cfg.K = 1;
  const PmleResult r = fit(data, cfg, 4);
  EXPECT_LE(r.iterations, 2);
  EXPECT_TRUE(r.converged);
  EXPECT_LE((r.estimate.component(0).cov() - s).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pmle, EmStepPreservesSymmetry) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) {
    const double v = normal(rng);
    xs.push_back(v);
    xs.push_back(-v);
  }
  const Eigen::MatrixXd x = column(xs);
  Mixture g = mix1({0.5, 0.5}, {{-0.7, 1.3}, {0.7, 1.3}});
  for (int t = 0; t < 10; ++t) {
    g = em_step(g, x, 0.1, sample_covariance(x));
    EXPECT_NEAR(g.weight(0), g.weight(1), 1e-12);
    EXPECT_NEAR(g.component(0).mean()[0], -g.component(1).mean()[0], 1e-12);
    EXPECT_NEAR(g.component(0).cov()(0, 0), g.component(1).cov()(0, 0), 1e-12);
  }
}

TEST(Pmle, EmStepIncreasesPenalizedLikelihoodAndRespectsFloor) {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 100; ++inst) {
    const Eigen::Index d = 1 + inst % 3;
    const int k = 1 + inst % 4;
    const Eigen::MatrixXd data =
        testing::random_mixture(k, d, rng, 2.0).sample(60 + inst, inst).points;
    const Eigen::MatrixXd s = sample_covariance(data);
    const double a = 1.0 / std::sqrt(double(data.rows()));
    const Mixture start = testing::random_mixture(k, d, rng, 2.0);
    const Mixture next = em_step(start, data, a, s);
    const double before = penalized_loglik(start, data, a, s);
    const double after = penalized_loglik(next, data, a, s);
    EXPECT_GE(after, before - 1e-10 * std::abs(before));
    const double n = double(data.rows());
    const double floor = 2 * a / (n + 2 * a) * min_eigenvalue(s);
    for (const Gaussian& c : next.components()) {
      EXPECT_GE(min_eigenvalue(c.cov()), floor - 1e-12);
    }
  }
}

TEST(Pmle, ResponsibilitiesAreOnTheSimplex) {
  std::mt19937_64 rng(6);
  const Mixture g = testing::random_mixture(4, 3, rng);
  const Eigen::MatrixXd data = g.sample(5000, 3).points;
  const Eigen::MatrixXd r = responsibilities(g, data, 3);
  EXPECT_GE(r.minCoeff(), 0.0);
  EXPECT_LE((r.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(r, responsibilities(g, data, 1));
}

TEST(Pmle, FitTraceIsMonotoneAndPenaltyFloorHolds) {
  std::mt19937_64 rng(7);
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::Index d = 1 + inst % 3;
    const Eigen::MatrixXd data =
        testing::random_mixture(3, d, rng, 1.5).sample(400, inst).points;
    PmleConfig cfg;
    cfg.K = 3;
    cfg.init = KmeansppInit{3};
    const PmleResult r = fit(data, cfg, inst);
    const auto& trace = r.penalized_loglik_trace;
    for (std::size_t t = 1; t < trace.size(); ++t) {
      const bool reseed = std::find(r.reseed_iterations.begin(), r.reseed_iterations.end(),
                                    int(t)) != r.reseed_iterations.end();
      if (!reseed) EXPECT_GE(trace[t], trace[t - 1] - 1e-10 * std::abs(trace[t - 1]));
    }
    const double n = double(data.rows());
    const double a = 1.0 / std::sqrt(n);
    const double floor = 2 * a / (n + 2 * a) * min_eigenvalue(sample_covariance(data));
    for (const Gaussian& c : r.estimate.components()) {
      EXPECT_GE(min_eigenvalue(c.cov()), floor - 1e-12);
    }
  }
}

TEST(Pmle, InfiniteToleranceStopsAfterOneIteration) {
  std::mt19937_64 rng(8);
  const Mixture truth = testing::random_mixture(2, 2, rng);
  const Eigen::MatrixXd data = truth.sample(200, 1).points;
  PmleConfig cfg;
  cfg.K = 2;
  cfg.tol = std::numeric_limits<double>::infinity();
  cfg.init = ExplicitInit{truth};
  const PmleResult r = fit(data, cfg, 0);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
}

TEST(Pmle, WellSeparatedRecovery) {
  const Mixture truth = mix1({0.5, 0.5}, {{-5, 1}, {5, 1}});
  const Eigen::MatrixXd data = truth.sample(5000, 42).points;
  PmleConfig cfg;
  cfg.K = 2;
  cfg.init = ExplicitInit{truth};
  const PmleResult r = fit(data, cfg, 0);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(metrics::w1_distance(r.estimate, truth), 0.15);

  cfg.init = KmeansppInit{};
  EXPECT_LE(metrics::w1_distance(fit(data, cfg, 1).estimate, truth), 0.15);
}

TEST(Pmle, RowPermutationInvariance) {
  std::mt19937_64 rng(9);
  const Mixture truth = testing::random_mixture(3, 2, rng);
  Eigen::MatrixXd data = truth.sample(500, 2).points;
  PmleConfig cfg;
  cfg.K = 3;
  cfg.init = ExplicitInit{truth};
  const PmleResult a = fit(data, cfg, 0);
  std::vector<int> perm(data.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd shuffled(data.rows(), data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) shuffled.row(i) = data.row(perm[i]);
  const PmleResult b = fit(shuffled, cfg, 0);
  ASSERT_EQ(a.iterations, b.iterations);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(a.estimate.weight(k), b.estimate.weight(k), 1e-9);
    EXPECT_LE((a.estimate.component(k).mean() - b.estimate.component(k).mean()).norm(), 1e-8);
    EXPECT_LE((a.estimate.component(k).cov() - b.estimate.component(k).cov()).norm(), 1e-8);
  }
}

TEST(Pmle, DeterministicAcrossSeedsAndThreads) {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd data = testing::random_mixture(3, 2, rng).sample(3000, 5).points;
  PmleConfig cfg;
  cfg.K = 3;
  cfg.init = KmeansppInit{4};
  const PmleResult a = fit(data, cfg, 11);
  cfg.threads = 3;
  const PmleResult b = fit(data, cfg, 11);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.penalized_loglik_trace, b.penalized_loglik_trace);
}

TEST(Pmle, KmeansppCentersAreDistinctRows) {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd data = testing::random_mixture(4, 2, rng).sample(100, 1).points;
  const auto centers = kmeanspp_centers(data, 4, 3);
  ASSERT_EQ(centers.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GE(centers[i], 0);
    EXPECT_LT(centers[i], 100);
    for (std::size_t j = 0; j < i; ++j) EXPECT_NE(centers[i], centers[j]);
  }
  EXPECT_EQ(centers, kmeanspp_centers(data, 4, 3));
}

TEST(Pmle, FitPreconditions) {
  PmleConfig cfg;
  cfg.K = 3;
  EXPECT_THROW(fit(column({1, 2, 3}), cfg, 0), InvalidArgument);
  cfg.K = 1;
  EXPECT_THROW(fit(column({1, NAN, 3}), cfg, 0), InvalidArgument);
  cfg.tol = 0.0;
  EXPECT_THROW(fit(column({1, 2, 3}), cfg, 0), InvalidArgument);
}

TEST(Pmle, StarvationIsReported) {
  // A component far from every point gets zero responsibility in double
  // precision.
  const Eigen::MatrixXd x = column({-1, 0, 1, 0.5});
  const Mixture g = mix1({0.5, 0.5}, {{0, 1}, {1e4, 0.01}});
  EXPECT_THROW(em_step(g, x, 0.1, sample_covariance(x)), NumericalError);
}

}  // namespace
}  // namespace scgmm
