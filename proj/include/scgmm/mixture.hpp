#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "scgmm/gaussian.hpp"

namespace scgmm {

/// Observations (one per row) with optional true component labels.
struct LabeledSample {
  Eigen::MatrixXd points;
  std::optional<std::vector<int>> labels;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

/// A finite mixing distribution G = sum_k w_k delta_{(mu_k, Sigma_k)}.
///
/// Weights must be nonnegative and sum to 1 within 1e-9. Weights below
/// 1e-12 are clamped to zero and the remainder renormalized; otherwise the
/// weights are stored bit-for-bit as given.
class Mixture {
 public:
  Mixture(std::vector<double> weights, std::vector<Gaussian> components);

  Eigen::Index dim() const { return components_.front().dim(); }
  std::size_t order() const { return components_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Gaussian>& components() const { return components_; }
  double weight(std::size_t k) const { return weights_[k]; }
  const Gaussian& component(std::size_t k) const { return components_[k]; }

  /// log sum_k w_k phi(x | mu_k, Sigma_k), via log-sum-exp.
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd log_density_rows(
      const Eigen::Ref<const Eigen::MatrixXd>& points) const;

  /// N x K matrix of log(w_k) + log phi(x_i | theta_k); -inf where w_k = 0.
  Eigen::MatrixXd weighted_log_densities(
      const Eigen::Ref<const Eigen::MatrixXd>& points) const;

  /// argmax_k w_k phi(x | theta_k); ties go to the smallest index.
  int classify(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::vector<int> classify_rows(
      const Eigen::Ref<const Eigen::MatrixXd>& points) const;

  /// n i.i.d. draws with their component labels. Deterministic in seed.
  LabeledSample sample(std::size_t n, std::uint64_t seed) const;

  bool operator==(const Mixture& other) const {
    return weights_ == other.weights_ && components_ == other.components_;
  }

 private:
  std::vector<double> weights_;
  std::vector<Gaussian> components_;
};

/// Row-wise log-sum-exp of an N x K matrix; rows of all -inf give -inf.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& m);

}  // namespace scgmm
