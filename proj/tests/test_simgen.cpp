#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "scgmm/simgen.hpp"
#include "test_util.hpp"

namespace scgmm {
namespace {

using testing::mix1;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

TEST(Simgen, PairwiseOverlapExamples) {
  const Mixture same = mix1({0.5, 0.5}, {{0, 1}, {0, 1}});
  const auto [a, b] = simgen::pairwise_overlap(same, 0, 1, 10000, 1);
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 0.0);

  const std::size_t mc = 100000;
  const Mixture g = mix1({0.5, 0.5}, {{-1, 1}, {1, 1}});
  const auto [o10, o01] = simgen::pairwise_overlap(g, 0, 1, mc, 2);
  const double p = normal_cdf(-1.0);
  EXPECT_NEAR(p, 0.1587, 1e-4);
  const double se = std::sqrt(p * (1 - p) / mc);
  EXPECT_LE(std::abs(o10 - p), 3 * se);
  EXPECT_LE(std::abs(o01 - p), 3 * se);

  const Mixture far = mix1({0.5, 0.5}, {{-5, 1}, {5, 1}});
  const auto [f1, f2] = simgen::pairwise_overlap(far, 0, 1, mc, 3);
  EXPECT_LE(f1, 1e-4);
  EXPECT_LE(f2, 1e-4);
}

TEST(Simgen, UnequalWeightsMatchAnalyticThreshold) {
  // 0.3 phi(x|-1,1) < 0.7 phi(x|1,1)  <=>  x > ln(3/7) / 2.
  const Mixture g = mix1({0.3, 0.7}, {{-1, 1}, {1, 1}});
  const double t = std::log(3.0 / 7.0) / 2.0;
  const std::size_t mc = 200000;
  const auto [o10, o01] = simgen::pairwise_overlap(g, 0, 1, mc, 4);
  const double p10 = 1 - normal_cdf(t + 1), p01 = normal_cdf(t - 1);
  EXPECT_LE(std::abs(o10 - p10), 3 * std::sqrt(p10 * (1 - p10) / mc));
  EXPECT_LE(std::abs(o01 - p01), 3 * std::sqrt(p01 * (1 - p01) / mc));
  EXPECT_EQ(simgen::max_omega(g, mc, 4), simgen::max_omega(g, mc, 4));
}

TEST(Simgen, GenerateHitsTargetsAndContracts) {
  for (double target : {0.01, 0.05, 0.10}) {
    simgen::OverlapSpec spec;
    spec.d = 2;
    spec.K = 3;
    spec.max_omega = target;
    spec.mc_samples = 20000;
    spec.seed = 17;
    simgen::GenerateTrace trace;
    const Mixture g = simgen::generate(spec, &trace);
    EXPECT_LE(std::abs(trace.achieved - target), 0.05 * target);
    EXPECT_EQ(simgen::max_omega(g, spec.mc_samples, simgen::overlap_seed(spec)), trace.achieved);
    for (double w : g.weights()) EXPECT_GE(w, 1.0 / (2 * spec.K) - 1e-15);
    for (const Gaussian& c : g.components()) {
      EXPECT_EQ(c.cov(), c.cov().transpose());
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c.cov()).eigenvalues().minCoeff(), 0.0);
    }
    EXPECT_EQ(simgen::generate(spec), g);

    // MaxOmega is monotone in the covariance scale along the search.
    auto evals = trace.evaluations;
    std::sort(evals.begin(), evals.end());
    for (std::size_t i = 1; i < evals.size(); ++i) {
      EXPECT_GE(evals[i].second, evals[i - 1].second);
    }
  }
}

TEST(Simgen, ScaleCovariances) {
  const Mixture g = mix1({0.5, 0.5}, {{-1, 2}, {1, 3}});
  const Mixture s = simgen::scale_covariances(g, 0.5);
  EXPECT_EQ(s.component(0).cov()(0, 0), 1.0);
  EXPECT_EQ(s.component(1).cov()(0, 0), 1.5);
  EXPECT_EQ(s.weights(), g.weights());
}

}  // namespace
}  // namespace scgmm
