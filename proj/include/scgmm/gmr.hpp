#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scgmm/mixture.hpp"
#include "scgmm/ot.hpp"

namespace scgmm::gmr {

/// Cost between a pooled component and a candidate reduced component.
using CostFunction = std::function<double(const Gaussian&, const Gaussian&)>;

enum class CostKind { kKl };

struct GmrConfig {
  int K = 1;
  CostKind cost = CostKind::kKl;
  double tol = 1e-6;
  int max_iter = 1000;
  /// Starting components (order K). Required by reduce(); the aggregators
  /// fill it with the median local estimate when the caller does not.
  std::optional<Mixture> init;
};

struct GmrResult {
  Mixture estimate;
  /// J_c at the initial components and after every MM iteration.
  std::vector<double> objective_trace;
  ot::TransportPlan plan;
  int iterations = 0;
  bool converged = false;
  /// Iterations at which an empty column was re-seeded.
  std::vector<int> reseed_iterations;
  /// Diagnostics, e.g. near-singular reduced covariances.
  std::vector<std::string> log;
};

/// Concatenate local mixing distributions; the k-th component of machine m
/// gets weight lambdas[m] * w_mk.
Mixture pool(std::span<const Mixture> locals, std::span<const double> lambdas);

/// Pairwise cost table c(pooled_i, reduced_gamma).
Eigen::MatrixXd cost_matrix(std::span<const Gaussian> pooled,
                            std::span<const Gaussian> reduced,
                            const CostFunction& cost);

/// J_c(G) = sum_i w_i min_gamma c(Phi_i, Phi_gamma).
double objective(const Mixture& pooled, std::span<const Gaussian> reduced,
                 const CostFunction& cost);
double objective(const Mixture& pooled, const Mixture& reduced);

/// Majorization-minimization reduction of `pooled` to order K: alternate the
/// row-argmin plan with per-column barycenter updates until J_c moves by less
/// than tol. Output weights are the column sums of the final plan.
GmrResult reduce(const Mixture& pooled, const GmrConfig& cfg);

/// Same iteration with an injected cost and barycenter (for synthetic cost
/// tables and alternative geometries).
using BarycenterFunction = std::function<Gaussian(std::span<const Gaussian>,
                                                  std::span<const double>)>;
GmrResult reduce_with(const Mixture& pooled, const GmrConfig& cfg,
                      const CostFunction& cost,
                      const BarycenterFunction& barycenter);

CostFunction kl_cost();

}  // namespace scgmm::gmr
