#include "scgmm/gmr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "scgmm/error.hpp"

namespace scgmm::gmr {

namespace {

constexpr double kTinyEigenvalue = 1e-10;

std::vector<double> column_sums(const Eigen::MatrixXd& plan) {
  std::vector<double> out(static_cast<std::size_t>(plan.cols()));
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = plan.col(j).sum();
  }
  return out;
}

void check_reduced(const Mixture& pooled, const GmrConfig& cfg) {
  if (cfg.K < 1) throw InvalidArgument("gmr: K must be >= 1");
  if (!(cfg.tol > 0.0)) throw InvalidArgument("gmr: tol must be > 0");
  if (cfg.max_iter < 1) throw InvalidArgument("gmr: max_iter must be >= 1");
  if (!cfg.init) throw InvalidArgument("gmr: no initial mixing distribution");
  if (static_cast<int>(cfg.init->order()) != cfg.K) {
    throw InvalidArgument("gmr: initial order != K");
  }
  if (cfg.init->dim() != pooled.dim()) {
    throw InvalidArgument("gmr: initial dimension mismatch");
  }
  if (static_cast<int>(pooled.order()) < cfg.K) {
    throw InvalidArgument("gmr: pooled order is smaller than K");
  }
}

}  // namespace

CostFunction kl_cost() {
  return [](const Gaussian& p, const Gaussian& q) { return kl_divergence(p, q); };
}

Mixture pool(std::span<const Mixture> locals, std::span<const double> lambdas) {
  if (locals.empty()) throw InvalidArgument("pool: no local estimates");
  if (locals.size() != lambdas.size()) {
    throw InvalidArgument("pool: lambdas length != number of locals");
  }
  const Eigen::Index d = locals.front().dim();
  std::vector<double> weights;
  std::vector<Gaussian> comps;
  for (std::size_t m = 0; m < locals.size(); ++m) {
    if (locals[m].dim() != d) throw InvalidArgument("pool: dimension mismatch");
    if (!(lambdas[m] >= 0.0)) throw InvalidArgument("pool: negative lambda");
    for (std::size_t k = 0; k < locals[m].order(); ++k) {
      weights.push_back(lambdas[m] * locals[m].weight(k));
      comps.push_back(locals[m].component(k));
    }
  }
  return Mixture(std::move(weights), std::move(comps));
}

Eigen::MatrixXd cost_matrix(std::span<const Gaussian> pooled,
                            std::span<const Gaussian> reduced,
                            const CostFunction& cost) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pooled.size()),
                      static_cast<Eigen::Index>(reduced.size()));
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t g = 0; g < reduced.size(); ++g) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) =
          cost(pooled[i], reduced[g]);
    }
  }
  return out;
}

double objective(const Mixture& pooled, std::span<const Gaussian> reduced,
                 const CostFunction& cost) {
  const Eigen::MatrixXd c = cost_matrix(pooled.components(), reduced, cost);
  return ot::relaxed_plan(c, pooled.weights()).objective;
}

double objective(const Mixture& pooled, const Mixture& reduced) {
  if (pooled.dim() != reduced.dim()) {
    throw InvalidArgument("gmr objective: dimension mismatch");
  }
  return objective(pooled, reduced.components(), kl_cost());
}

GmrResult reduce(const Mixture& pooled, const GmrConfig& cfg) {
  return reduce_with(pooled, cfg, kl_cost(),
                     [](std::span<const Gaussian> gs, std::span<const double> l) {
                       return kl_barycenter(gs, l);
                     });
}

GmrResult reduce_with(const Mixture& pooled, const GmrConfig& cfg,
                      const CostFunction& cost,
                      const BarycenterFunction& barycenter) {
  check_reduced(pooled, cfg);
  const auto& atoms = pooled.components();
  const auto& w = pooled.weights();
  const auto k_count = static_cast<std::size_t>(cfg.K);

  std::vector<Gaussian> comps = cfg.init->components();
  Eigen::MatrixXd c = cost_matrix(atoms, comps, cost);
  ot::TransportPlan plan = ot::relaxed_plan(c, w);

  GmrResult res{*cfg.init, {plan.objective}, plan, 0, false, {}, {}};
  double current = plan.objective;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const std::vector<double> mass = column_sums(plan.plan);
    std::vector<Gaussian> next;
    next.reserve(k_count);
    std::vector<std::size_t> empty;
    for (std::size_t g = 0; g < k_count; ++g) {
      if (!(mass[g] > 0.0)) {
        empty.push_back(g);
        next.push_back(comps[g]);
        continue;
      }
      std::vector<Gaussian> members;
      std::vector<double> lambdas;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const double p = plan.plan(static_cast<Eigen::Index>(i),
                                   static_cast<Eigen::Index>(g));
        if (p > 0.0) {
          members.push_back(atoms[i]);
          lambdas.push_back(p / mass[g]);
        }
      }
      // Renormalize away the last-ulp drift of p / mass.
      const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
      for (double& l : lambdas) l /= total;
      next.push_back(barycenter(members, lambdas));
    }

    if (!empty.empty()) {
      // Re-seed empty columns at the pooled atoms carrying the largest
      // transport cost under the current plan, skipping atoms already
      // represented exactly.
      std::vector<std::pair<double, std::size_t>> candidates;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double best = c.row(row).minCoeff();
        if (best > 0.0 && w[i] > 0.0) candidates.emplace_back(w[i] * best, i);
      }
      std::stable_sort(candidates.begin(), candidates.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      if (candidates.size() < empty.size()) {
        std::ostringstream msg;
        msg << "gmr: " << empty.size()
            << " reduced component(s) received no mass and no pooled "
               "component is left to re-seed them";
        throw NumericalError(msg.str());
      }
      for (std::size_t e = 0; e < empty.size(); ++e) {
        next[empty[e]] = atoms[candidates[e].second];
      }
      res.reseed_iterations.push_back(it);
      std::ostringstream msg;
      msg << "iteration " << it << ": re-seeded " << empty.size()
          << " empty component(s)";
      res.log.push_back(msg.str());
    }

    comps = std::move(next);
    c = cost_matrix(atoms, comps, cost);
    plan = ot::relaxed_plan(c, w);
    res.objective_trace.push_back(plan.objective);
    res.iterations = it;
    const double change = std::abs(current - plan.objective);
    current = plan.objective;
    if (empty.empty() && change < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  for (std::size_t g = 0; g < comps.size(); ++g) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(comps[g].cov(),
                                                       Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < kTinyEigenvalue) {
      std::ostringstream msg;
      msg << "component " << g << " has covariance eigenvalue "
          << eig.eigenvalues().minCoeff() << " below " << kTinyEigenvalue;
      res.log.push_back(msg.str());
    }
  }

  res.estimate = Mixture(column_sums(plan.plan), std::move(comps));
  res.plan = std::move(plan);
  return res;
}

}  // namespace scgmm::gmr
