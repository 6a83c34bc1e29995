#pragma once

#include <Eigen/Dense>
#include <span>

namespace scgmm {

/// A d-dimensional Gaussian N(mean, cov) with a cached lower Cholesky
/// factor. Immutable after construction; the constructor symmetrizes the
/// covariance as (A + A^T) / 2 and rejects it unless the factorization
/// succeeds with strictly positive pivots.
class Gaussian {
 public:
  Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  /// Univariate convenience: N(mean, variance).
  static Gaussian univariate(double mean, double variance);

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  /// Lower-triangular L with L L^T = cov.
  const Eigen::MatrixXd& chol() const { return chol_; }
  /// log det(cov) = 2 * sum(log diag(L)).
  double log_det() const { return log_det_; }

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Log-density of every row of `points` (N x d).
  Eigen::VectorXd log_density_rows(
      const Eigen::Ref<const Eigen::MatrixXd>& points) const;

  /// Squared Mahalanobis distance (x - mean)^T cov^{-1} (x - mean).
  double mahalanobis2(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// cov^{-1} * rhs through the Cholesky factor.
  Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;

  bool operator==(const Gaussian& other) const {
    return mean_ == other.mean_ && cov_ == other.cov_;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
};

/// KL(p || q) in closed form.
double kl_divergence(const Gaussian& p, const Gaussian& q);

/// ||mu_p - mu_q||_2 + ||cov_p^{1/2} - cov_q^{1/2}||_F, the ground distance
/// behind the W1 performance metric.
double ground_distance(const Gaussian& p, const Gaussian& q);

/// Principal square root of a symmetric PSD matrix. Eigenvalues are
/// clamped at zero before the square root.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& a);

/// Minimizer over Gaussians eta of sum_m lambdas[m] * KL(gs[m] || eta):
/// the lambda-weighted mean and the weighted covariance plus spread of the
/// means about it. Zero-weight inputs are ignored.
Gaussian kl_barycenter(std::span<const Gaussian> gs,
                       std::span<const double> lambdas);

}  // namespace scgmm
