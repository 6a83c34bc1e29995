#pragma once

#include <Eigen/Dense>
#include <vector>

#include "scgmm/mixture.hpp"

namespace scgmm::metrics {

/// A partition of N items into K clusters labelled 0..K-1.
struct Clustering {
  std::vector<int> labels;
  int K = 0;

  /// Infers K as 1 + the largest label.
  static Clustering from_labels(std::vector<int> labels);
};

/// Transportation distance between mixing distributions under the ground
/// distance ||mu_i - mu_j|| + ||Sigma_i^{1/2} - Sigma_j^{1/2}||_F. Orders may
/// differ.
double w1_distance(const Mixture& estimate, const Mixture& truth);

/// sigma with sigma[k] = estimated component paired with true component k,
/// minimizing sum_k KL(true_k || estimated_sigma(k)).
std::vector<int> align_labels(const Mixture& estimate, const Mixture& truth);

/// Fraction of points whose classify() label under `estimate` differs from
/// alignment[true label].
double misclassification_rate(const Mixture& estimate,
                              const LabeledSample& sample,
                              const std::vector<int>& alignment);

/// Adjusted Rand index from the pair-counting contingency table. When both
/// partitions are trivial in the same way (the expected index equals its
/// maximum), returns 1.
double ari(const Clustering& a, const Clustering& b);

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres).
/// Returns assignment[row] = column.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

}  // namespace scgmm::metrics
