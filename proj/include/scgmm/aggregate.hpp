#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "scgmm/gmr.hpp"
#include "scgmm/mixture.hpp"
#include "scgmm/pmle.hpp"

namespace scgmm::aggregate {

/// Data partitioned over M simulated machines; lambdas[m] = N_m / N.
struct ShardedDataset {
  std::vector<LabeledSample> shards;
  std::vector<double> lambdas;

  std::size_t machines() const { return shards.size(); }
  std::size_t total_size() const;
};

struct ShardDiagnostics {
  int iterations = 0;
  bool converged = false;
  double penalized_loglik = 0.0;
  double seconds = 0.0;
};

struct LocalEstimates {
  std::vector<Mixture> estimates;
  std::vector<double> lambdas;
  std::vector<ShardDiagnostics> diagnostics;
};

/// Uniform random permutation, then contiguous blocks whose sizes differ by
/// at most one (larger blocks first). Labels, if present, follow their rows.
ShardedDataset split(const LabeledSample& data, std::size_t machines,
                     std::uint64_t seed);

/// pMLE per shard with penalty N_m^{-1/2} and the shard's own sample
/// covariance; shard m uses seed derive_seed(seed, "local", m). Shards run
/// concurrently on `threads` workers; cfg.penalty is ignored.
LocalEstimates fit_locals(const ShardedDataset& shards, const PmleConfig& cfg,
                          std::uint64_t seed, int threads = 1);

/// Pool the locals and reduce to order cfg.K. Without cfg.init, the median
/// local estimate is the starting point.
gmr::GmrResult aggregate_gmr_result(const LocalEstimates& locals,
                                    gmr::GmrConfig cfg);
Mixture aggregate_gmr(const LocalEstimates& locals, const gmr::GmrConfig& cfg);

/// sum_m' lambda_m' T_KL(G_m', candidate) with both marginals fixed.
double median_criterion(const LocalEstimates& locals, const Mixture& candidate);

/// Index of the local estimate minimizing median_criterion (smallest index
/// on ties).
std::size_t median_index(const LocalEstimates& locals);
Mixture aggregate_median(const LocalEstimates& locals);

struct KlAverageConfig {
  int K = 1;
  std::size_t per_machine_n = 1000;
  int n_starts = 10;
  double tol = 1e-6;
  int max_iter = 10000;
  int threads = 1;
};

/// Refit a K-component pMLE (penalty (M n)^{-1/2}, kmeans++ multistart) on
/// per_machine_n draws from each local estimate.
Mixture aggregate_klavg(const LocalEstimates& locals, const KlAverageConfig& cfg,
                        std::uint64_t seed);

/// Synthetic pooled sample used by aggregate_klavg.
LabeledSample klavg_sample(const LocalEstimates& locals,
                           std::size_t per_machine_n, std::uint64_t seed);

}  // namespace scgmm::aggregate
