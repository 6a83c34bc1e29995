#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "scgmm/mixture.hpp"

namespace scgmm {

/// Start from D^2-sampled centers on the raw data, every covariance set to
/// the sample covariance and uniform weights; run `n_starts` chains and keep
/// the best.
struct KmeansppInit {
  int n_starts = 10;
};

/// Start from a given mixing distribution.
struct ExplicitInit {
  Mixture start;
};

using PmleInit = std::variant<KmeansppInit, ExplicitInit>;

struct PmleConfig {
  int K = 1;
  /// Penalty size a_n; defaults to n^{-1/2} when unset.
  std::optional<double> penalty;
  /// Stop when the per-observation increment of the penalized log-likelihood
  /// falls below tol.
  double tol = 1e-6;
  int max_iter = 10000;
  PmleInit init = KmeansppInit{};
  /// Workers for the E-step and multistart chains. Results do not depend on
  /// this value.
  int threads = 1;
};

struct PmleResult {
  Mixture estimate;
  /// Penalized log-likelihood at the start and after every EM step.
  std::vector<double> penalized_loglik_trace;
  int iterations = 0;
  bool converged = false;
  /// Iterations at which a starved component was re-seeded; the trace may
  /// drop at these steps.
  std::vector<int> reseed_iterations;
};

/// Biased (divisor N) sample covariance.
Eigen::MatrixXd sample_covariance(const Eigen::Ref<const Eigen::MatrixXd>& data);

/// sum_i log f(x_i | G) - a_n * sum_k [tr(S Sigma_k^{-1}) + log det Sigma_k].
double penalized_loglik(const Mixture& g,
                        const Eigen::Ref<const Eigen::MatrixXd>& data,
                        double penalty, const Eigen::MatrixXd& s);

/// N x K responsibilities w_ik under g; each row sums to one.
Eigen::MatrixXd responsibilities(const Mixture& g,
                                 const Eigen::Ref<const Eigen::MatrixXd>& data,
                                 int threads = 1);

/// One EM iteration for the penalized likelihood. Throws NumericalError
/// ("component starvation") when an updated weight falls below 1e-300.
Mixture em_step(const Mixture& g, const Eigen::Ref<const Eigen::MatrixXd>& data,
                double penalty, const Eigen::MatrixXd& s, int threads = 1);

/// The penalized MLE of a K-component mixture. Deterministic in seed.
PmleResult fit(const Eigen::Ref<const Eigen::MatrixXd>& data,
               const PmleConfig& cfg, std::uint64_t seed);

/// D^2 (kmeans++) seeding: K row indices into data.
std::vector<Eigen::Index> kmeanspp_centers(
    const Eigen::Ref<const Eigen::MatrixXd>& data, int k, std::uint64_t seed);

}  // namespace scgmm
