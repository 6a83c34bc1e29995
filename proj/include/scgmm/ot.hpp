#pragma once

#include <Eigen/Dense>
#include <span>

namespace scgmm::ot {

/// A transport plan pi (rows: source atoms, columns: target atoms) and its
/// cost sum_{i,j} pi_ij c_ij.
struct TransportPlan {
  Eigen::MatrixXd plan;
  double objective = 0.0;
};

/// Exact optimal transport between discrete marginals w (rows) and v
/// (columns) by the transportation simplex with Bland's rule.
///
/// Costs must be finite and nonnegative; w and v nonnegative and summing to
/// 1 within 1e-9. Zero-mass rows and columns are removed before solving and
/// come back as zero rows/columns of the plan.
TransportPlan solve_ot(const Eigen::MatrixXd& cost, std::span<const double> w,
                       std::span<const double> v);

/// Optimal plan when only the row marginal is fixed: every row sends all of
/// its mass to its cheapest column (smallest index on ties).
TransportPlan relaxed_plan(const Eigen::MatrixXd& cost,
                           std::span<const double> w);

}  // namespace scgmm::ot
