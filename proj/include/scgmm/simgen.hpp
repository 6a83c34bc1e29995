#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scgmm/mixture.hpp"

namespace scgmm::simgen {

struct OverlapSpec {
  int d = 2;
  int K = 3;
  /// Target maximum pairwise overlap, in (0, 1).
  double max_omega = 0.05;
  std::size_t mc_samples = 100000;
  std::uint64_t seed = 0;
};

/// (o_{j|i}, o_{i|j}): probability that a draw from component i is
/// classified to j by the weighted-density rule (strict inequality), and
/// vice versa. Monte Carlo with mc_samples draws from each side.
std::pair<double, double> pairwise_overlap(const Mixture& g, std::size_t i,
                                           std::size_t j, std::size_t mc_samples,
                                           std::uint64_t seed);

/// max over pairs of o_{j|i} + o_{i|j}. Pair (i, j) uses a stream derived
/// from (seed, i, j), so repeated calls with one seed reuse the same draws.
double max_omega(const Mixture& g, std::size_t mc_samples, std::uint64_t seed);

/// Every covariance multiplied by `scale`.
Mixture scale_covariances(const Mixture& g, double scale);

struct GenerateTrace {
  /// (scale, MaxOmega) for every evaluated scale, in evaluation order.
  std::vector<std::pair<double, double>> evaluations;
  double scale = 1.0;
  double achieved = 0.0;
};

/// Seed of the Monte Carlo streams generate() uses for the overlap of its
/// output: max_omega(generate(spec), spec.mc_samples, overlap_seed(spec))
/// reproduces the achieved value exactly.
std::uint64_t overlap_seed(const OverlapSpec& spec);

/// Random mixture whose Monte Carlo MaxOmega is within 5% (relative) of the
/// target. Means uniform in the unit cube; covariances Q diag(e) Q^T with
/// Q a random orthogonal matrix and e uniform in [0.05, 1]; weights
/// 1/(2K) + u/2 with u uniform on the simplex. A single global covariance
/// scale is then bisected (on log scale) to hit the target.
Mixture generate(const OverlapSpec& spec, GenerateTrace* trace = nullptr);

}  // namespace scgmm::simgen
