#include "scgmm/aggregate.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "scgmm/error.hpp"
#include "scgmm/ot.hpp"
#include "scgmm/parallel.hpp"
#include "scgmm/rng.hpp"

namespace scgmm::aggregate {

namespace {

void check_locals(const LocalEstimates& locals) {
  if (locals.estimates.empty()) {
    throw InvalidArgument("aggregate: no local estimates");
  }
  if (locals.lambdas.size() != locals.estimates.size()) {
    throw InvalidArgument("aggregate: lambdas length != number of estimates");
  }
  const auto& first = locals.estimates.front();
  for (const auto& g : locals.estimates) {
    if (g.order() != first.order()) {
      throw InvalidArgument("aggregate: local estimates differ in order");
    }
    if (g.dim() != first.dim()) {
      throw InvalidArgument("aggregate: local estimates differ in dimension");
    }
  }
  double total = 0.0;
  for (double l : locals.lambdas) {
    if (!(l >= 0.0)) throw InvalidArgument("aggregate: negative lambda");
    total += l;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("aggregate: lambdas do not sum to 1");
  }
}

// T_KL(from, to): both marginals fixed, cost KL(from_i || to_j).
double transport_kl(const Mixture& from, const Mixture& to) {
  const Eigen::MatrixXd cost =
      gmr::cost_matrix(from.components(), to.components(), gmr::kl_cost());
  return ot::solve_ot(cost, from.weights(), to.weights()).objective;
}

}  // namespace

std::size_t ShardedDataset::total_size() const {
  std::size_t n = 0;
  for (const auto& s : shards) n += static_cast<std::size_t>(s.size());
  return n;
}

ShardedDataset split(const LabeledSample& data, std::size_t machines,
                     std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(data.size());
  if (machines < 1) throw InvalidArgument("split: M must be >= 1");
  if (machines > n) throw InvalidArgument("split: M exceeds the sample size");

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Engine engine = make_engine(seed, "aggregate.split");
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(engine)]);
  }

  ShardedDataset out;
  const std::size_t base = n / machines;
  const std::size_t extra = n % machines;
  std::size_t offset = 0;
  for (std::size_t m = 0; m < machines; ++m) {
    const std::size_t size = base + (m < extra ? 1 : 0);
    LabeledSample shard;
    shard.points.resize(static_cast<Eigen::Index>(size), data.dim());
    if (data.labels) shard.labels.emplace(size);
    for (std::size_t r = 0; r < size; ++r) {
      const Eigen::Index src = order[offset + r];
      shard.points.row(static_cast<Eigen::Index>(r)) = data.points.row(src);
      if (data.labels) {
        (*shard.labels)[r] = (*data.labels)[static_cast<std::size_t>(src)];
      }
    }
    offset += size;
    out.lambdas.push_back(static_cast<double>(size) / static_cast<double>(n));
    out.shards.push_back(std::move(shard));
  }
  return out;
}

LocalEstimates fit_locals(const ShardedDataset& shards, const PmleConfig& cfg,
                          std::uint64_t seed, int threads) {
  const std::size_t m_count = shards.machines();
  if (m_count == 0) throw InvalidArgument("fit_locals: no shards");
  std::vector<std::optional<PmleResult>> fits(m_count);
  std::vector<double> seconds(m_count, 0.0);
  parallel_for(m_count, threads, [&](std::size_t m) {
    PmleConfig shard_cfg = cfg;
    shard_cfg.penalty.reset();  // N_m^{-1/2}
    shard_cfg.threads = threads > 1 ? 1 : cfg.threads;
    const auto start = std::chrono::steady_clock::now();
    try {
      fits[m] = fit(shards.shards[m].points, shard_cfg,
                    derive_seed(seed, "local", m));
    } catch (const NumericalError& e) {
      throw NumericalError("shard " + std::to_string(m) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("shard " + std::to_string(m) + ": " + e.what());
    }
    seconds[m] = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  });

  LocalEstimates out;
  out.lambdas = shards.lambdas;
  for (std::size_t m = 0; m < m_count; ++m) {
    out.estimates.push_back(fits[m]->estimate);
    out.diagnostics.push_back({fits[m]->iterations, fits[m]->converged,
                               fits[m]->penalized_loglik_trace.back(),
                               seconds[m]});
  }
  return out;
}

double median_criterion(const LocalEstimates& locals, const Mixture& candidate) {
  double total = 0.0;
  for (std::size_t m = 0; m < locals.estimates.size(); ++m) {
    if (locals.lambdas[m] == 0.0) continue;
    total += locals.lambdas[m] * transport_kl(locals.estimates[m], candidate);
  }
  return total;
}

std::size_t median_index(const LocalEstimates& locals) {
  check_locals(locals);
  std::size_t best = 0;
  double best_value = median_criterion(locals, locals.estimates.front());
  for (std::size_t m = 1; m < locals.estimates.size(); ++m) {
    const double value = median_criterion(locals, locals.estimates[m]);
    if (value < best_value) {
      best_value = value;
      best = m;
    }
  }
  return best;
}

Mixture aggregate_median(const LocalEstimates& locals) {
  return locals.estimates[median_index(locals)];
}

gmr::GmrResult aggregate_gmr_result(const LocalEstimates& locals,
                                    gmr::GmrConfig cfg) {
  check_locals(locals);
  if (!cfg.init) cfg.init = aggregate_median(locals);
  const Mixture pooled = gmr::pool(locals.estimates, locals.lambdas);
  return gmr::reduce(pooled, cfg);
}

Mixture aggregate_gmr(const LocalEstimates& locals, const gmr::GmrConfig& cfg) {
  return aggregate_gmr_result(locals, cfg).estimate;
}

LabeledSample klavg_sample(const LocalEstimates& locals,
                           std::size_t per_machine_n, std::uint64_t seed) {
  check_locals(locals);
  const std::size_t m_count = locals.estimates.size();
  const Eigen::Index d = locals.estimates.front().dim();
  LabeledSample pooled;
  pooled.points.resize(static_cast<Eigen::Index>(m_count * per_machine_n), d);
  for (std::size_t m = 0; m < m_count; ++m) {
    const LabeledSample draw = locals.estimates[m].sample(
        per_machine_n, derive_seed(seed, "klavg.sample", m));
    pooled.points.middleRows(static_cast<Eigen::Index>(m * per_machine_n),
                             static_cast<Eigen::Index>(per_machine_n)) =
        draw.points;
  }
  return pooled;
}

Mixture aggregate_klavg(const LocalEstimates& locals, const KlAverageConfig& cfg,
                        std::uint64_t seed) {
  check_locals(locals);
  if (cfg.per_machine_n < static_cast<std::size_t>(cfg.K) + 1) {
    throw InvalidArgument("klavg: per_machine_n must be >= K + 1");
  }
  const LabeledSample pooled = klavg_sample(locals, cfg.per_machine_n, seed);
  PmleConfig fit_cfg;
  fit_cfg.K = cfg.K;
  fit_cfg.penalty = 1.0 / std::sqrt(static_cast<double>(pooled.size()));
  fit_cfg.tol = cfg.tol;
  fit_cfg.max_iter = cfg.max_iter;
  fit_cfg.init = KmeansppInit{cfg.n_starts};
  fit_cfg.threads = cfg.threads;
  return fit(pooled.points, fit_cfg, derive_seed(seed, "klavg.fit")).estimate;
}

}  // namespace scgmm::aggregate
