#include "scgmm/pmle.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "scgmm/error.hpp"
#include "scgmm/parallel.hpp"
#include "scgmm/rng.hpp"

namespace scgmm {

namespace {

constexpr Eigen::Index kBlockRows = 2048;
constexpr double kStarvedWeight = 1e-300;
constexpr double kReseedMass = 1e-8;

void check_data(const Eigen::Ref<const Eigen::MatrixXd>& data) {
  if (data.rows() < 1 || data.cols() < 1) {
    throw InvalidArgument("pmle: empty data");
  }
  if (!data.allFinite()) throw InvalidArgument("pmle: non-finite data");
}

double penalty_term(const Mixture& g, const Eigen::MatrixXd& s) {
  double total = 0.0;
  for (const auto& c : g.components()) {
    total += c.solve(s).trace() + c.log_det();
  }
  return total;
}

struct MStep {
  std::vector<double> mass;  // N w_k
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
};

// Closed-form maximizer of Q(G; G_t) given responsibilities. Components
// with zero mass are left empty (mean/cov of size 0).
MStep m_step(const Eigen::MatrixXd& resp,
             const Eigen::Ref<const Eigen::MatrixXd>& data, double penalty,
             const Eigen::MatrixXd& s) {
  const Eigen::Index k_count = resp.cols();
  MStep out;
  out.mass.resize(static_cast<std::size_t>(k_count));
  out.means.resize(static_cast<std::size_t>(k_count));
  out.covs.resize(static_cast<std::size_t>(k_count));
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double nk = resp.col(k).sum();
    out.mass[kk] = nk;
    if (!(nk > 0.0)) continue;
    Eigen::VectorXd mean = data.transpose() * resp.col(k) / nk;
    Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
    Eigen::MatrixXd scatter =
        centered.transpose() * resp.col(k).asDiagonal() * centered;
    out.covs[kk] = (2.0 * penalty * s + scatter) / (2.0 * penalty + nk);
    out.means[kk] = std::move(mean);
  }
  return out;
}

double default_penalty(Eigen::Index n) {
  return 1.0 / std::sqrt(static_cast<double>(n));
}

Mixture initial_from_centers(const Eigen::Ref<const Eigen::MatrixXd>& data,
                             const std::vector<Eigen::Index>& centers,
                             const Eigen::MatrixXd& s) {
  const std::size_t k = centers.size();
  std::vector<Gaussian> comps;
  comps.reserve(k);
  for (Eigen::Index idx : centers) {
    comps.emplace_back(data.row(idx).transpose(), s);
  }
  return Mixture(std::vector<double>(k, 1.0 / static_cast<double>(k)),
                 std::move(comps));
}

struct ChainResult {
  std::optional<PmleResult> result;
  std::string error;
};

// One EM chain from `start`. Starved components are re-seeded at the
// observation with the lowest mixture density.
PmleResult run_chain(const Eigen::Ref<const Eigen::MatrixXd>& data,
                     Mixture start, double penalty, const Eigen::MatrixXd& s,
                     const PmleConfig& cfg, int threads) {
  const auto n = static_cast<double>(data.rows());
  PmleResult res{std::move(start), {}, 0, false, {}};
  double current = penalized_loglik(res.estimate, data, penalty, s);
  res.penalized_loglik_trace.push_back(current);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Eigen::MatrixXd resp = responsibilities(res.estimate, data, threads);
    MStep m = m_step(resp, data, penalty, s);

    bool reseeded = false;
    const std::size_t k_count = m.mass.size();
    std::vector<double> weights(k_count);
    std::vector<Gaussian> comps;
    comps.reserve(k_count);
    Eigen::Index worst = -1;
    for (std::size_t k = 0; k < k_count; ++k) {
      if (m.mass[k] < kReseedMass) {
        if (worst < 0) {
          res.estimate.log_density_rows(data).minCoeff(&worst);
        }
        reseeded = true;
        weights[k] = 1.0 / n;
        comps.emplace_back(data.row(worst).transpose(), s);
      } else {
        weights[k] = m.mass[k] / n;
        comps.emplace_back(std::move(m.means[k]), std::move(m.covs[k]));
      }
    }
    if (reseeded) {
      double total = 0.0;
      for (double w : weights) total += w;
      for (double& w : weights) w /= total;
      res.reseed_iterations.push_back(it);
    }
    res.estimate = Mixture(std::move(weights), std::move(comps));
    const double next = penalized_loglik(res.estimate, data, penalty, s);
    res.penalized_loglik_trace.push_back(next);
    res.iterations = it;
    const double increment = (next - current) / n;
    current = next;
    if (!reseeded && increment < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace

Eigen::MatrixXd sample_covariance(
    const Eigen::Ref<const Eigen::MatrixXd>& data) {
  check_data(data);
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd s = centered.transpose() * centered /
                      static_cast<double>(data.rows());
  return 0.5 * (s + s.transpose());
}

double penalized_loglik(const Mixture& g,
                        const Eigen::Ref<const Eigen::MatrixXd>& data,
                        double penalty, const Eigen::MatrixXd& s) {
  if (data.cols() != g.dim() || s.rows() != g.dim() || s.cols() != g.dim()) {
    throw InvalidArgument("penalized_loglik: dimension mismatch");
  }
  const double loglik = g.log_density_rows(data).sum();
  return loglik - penalty * penalty_term(g, s);
}

Eigen::MatrixXd responsibilities(const Mixture& g,
                                 const Eigen::Ref<const Eigen::MatrixXd>& data,
                                 int threads) {
  const Eigen::Index n = data.rows();
  const auto k = static_cast<Eigen::Index>(g.order());
  Eigen::MatrixXd resp(n, k);
  const auto blocks = static_cast<std::size_t>((n + kBlockRows - 1) / kBlockRows);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kBlockRows;
    const Eigen::Index rows = std::min(kBlockRows, n - begin);
    Eigen::MatrixXd scores =
        g.weighted_log_densities(data.middleRows(begin, rows));
    const Eigen::VectorXd norm = log_sum_exp_rows(scores);
    for (Eigen::Index i = 0; i < rows; ++i) {
      scores.row(i) = (scores.row(i).array() - norm[i]).exp();
    }
    resp.middleRows(begin, rows) = scores;
  });
  return resp;
}

Mixture em_step(const Mixture& g, const Eigen::Ref<const Eigen::MatrixXd>& data,
                double penalty, const Eigen::MatrixXd& s, int threads) {
  check_data(data);
  if (data.cols() != g.dim()) {
    throw InvalidArgument("em_step: dimension mismatch");
  }
  const Eigen::MatrixXd resp = responsibilities(g, data, threads);
  MStep m = m_step(resp, data, penalty, s);
  const auto n = static_cast<double>(data.rows());
  std::vector<double> weights;
  std::vector<Gaussian> comps;
  for (std::size_t k = 0; k < m.mass.size(); ++k) {
    const double w = m.mass[k] / n;
    if (!(w >= kStarvedWeight)) {
      std::ostringstream msg;
      msg << "component starvation: component " << k << " has weight " << w;
      throw NumericalError(msg.str());
    }
    weights.push_back(w);
    comps.emplace_back(std::move(m.means[k]), std::move(m.covs[k]));
  }
  return Mixture(std::move(weights), std::move(comps));
}

std::vector<Eigen::Index> kmeanspp_centers(
    const Eigen::Ref<const Eigen::MatrixXd>& data, int k, std::uint64_t seed) {
  const Eigen::Index n = data.rows();
  if (k < 1 || k > n) throw InvalidArgument("kmeans++: need 1 <= K <= N");
  Engine engine = make_engine(seed, "pmle.kmeanspp");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto uniform_index = [&] {
    const auto idx = static_cast<Eigen::Index>(uniform(engine) *
                                               static_cast<double>(n));
    return std::min(idx, n - 1);
  };

  std::vector<Eigen::Index> centers{uniform_index()};
  Eigen::VectorXd d2 =
      (data.rowwise() - data.row(centers.back())).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (!(total > 0.0)) {
      pick = uniform_index();
    } else {
      const double target = uniform(engine) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(pick);
    d2 = d2.cwiseMin(
        (data.rowwise() - data.row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

PmleResult fit(const Eigen::Ref<const Eigen::MatrixXd>& data,
               const PmleConfig& cfg, std::uint64_t seed) {
  check_data(data);
  if (cfg.K < 1) throw InvalidArgument("pmle: K must be >= 1");
  if (data.rows() <= cfg.K) {
    throw InvalidArgument("pmle: need more observations than components (N > K)");
  }
  if (!(cfg.tol > 0.0)) throw InvalidArgument("pmle: tol must be > 0");
  if (cfg.max_iter < 1) throw InvalidArgument("pmle: max_iter must be >= 1");
  const double penalty = cfg.penalty.value_or(default_penalty(data.rows()));
  if (!(penalty > 0.0)) throw InvalidArgument("pmle: penalty must be > 0");
  const Eigen::MatrixXd s = sample_covariance(data);

  if (const auto* init = std::get_if<ExplicitInit>(&cfg.init)) {
    if (static_cast<int>(init->start.order()) != cfg.K) {
      throw InvalidArgument("pmle: explicit init has order != K");
    }
    if (init->start.dim() != data.cols()) {
      throw InvalidArgument("pmle: explicit init dimension mismatch");
    }
    return run_chain(data, init->start, penalty, s, cfg, cfg.threads);
  }

  const int starts = std::get<KmeansppInit>(cfg.init).n_starts;
  if (starts < 1) throw InvalidArgument("pmle: n_starts must be >= 1");
  std::vector<ChainResult> chains(static_cast<std::size_t>(starts));
  const int outer = std::min(cfg.threads, starts);
  const int inner = outer > 1 ? 1 : cfg.threads;
  parallel_for(chains.size(), outer, [&](std::size_t c) {
    try {
      const std::uint64_t chain_seed = derive_seed(seed, "pmle.start", c);
      Mixture start = initial_from_centers(
          data, kmeanspp_centers(data, cfg.K, chain_seed), s);
      chains[c].result =
          run_chain(data, std::move(start), penalty, s, cfg, inner);
    } catch (const NumericalError& e) {
      chains[c].error = e.what();
    }
  });

  std::size_t best = chains.size();
  for (std::size_t c = 0; c < chains.size(); ++c) {
    if (!chains[c].result) continue;
    if (best == chains.size() ||
        chains[c].result->penalized_loglik_trace.back() >
            chains[best].result->penalized_loglik_trace.back()) {
      best = c;
    }
  }
  if (best == chains.size()) {
    throw NumericalError("pmle: every start failed; first error: " +
                         chains.front().error);
  }
  return std::move(*chains[best].result);
}

}  // namespace scgmm
