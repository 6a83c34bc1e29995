#include "scgmm/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "scgmm/error.hpp"

namespace scgmm {

namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

}  // namespace

Gaussian::Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)) {
  const Eigen::Index d = mean_.size();
  if (d < 1) throw InvalidArgument("gaussian: dimension must be >= 1");
  if (cov.rows() != d || cov.cols() != d) {
    std::ostringstream msg;
    msg << "gaussian: covariance is " << cov.rows() << "x" << cov.cols()
        << " but mean has length " << d;
    throw InvalidArgument(msg.str());
  }
  if (!all_finite(mean_) || !all_finite(cov)) {
    throw InvalidArgument("gaussian: non-finite parameter");
  }
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("covariance not symmetric");
  }
  cov_ = 0.5 * (cov + cov.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance not positive definite");
  }
  chol_ = llt.matrixL();
  const Eigen::VectorXd diag = chol_.diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite()) {
    throw NumericalError("covariance not positive definite");
  }
  log_det_ = 2.0 * diag.array().log().sum();
}

Gaussian Gaussian::univariate(double mean, double variance) {
  return Gaussian(Eigen::VectorXd::Constant(1, mean),
                  Eigen::MatrixXd::Constant(1, 1, variance));
}

double Gaussian::mahalanobis2(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) {
    throw InvalidArgument("gaussian: point dimension mismatch");
  }
  const Eigen::VectorXd z =
      chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return z.squaredNorm();
}

double Gaussian::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) {
    throw InvalidArgument("gaussian: point dimension mismatch");
  }
  if (!x.allFinite()) throw InvalidArgument("gaussian: non-finite point");
  return -0.5 * (static_cast<double>(dim()) * kLog2Pi + log_det_ +
                 mahalanobis2(x));
}

Eigen::VectorXd Gaussian::log_density_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  if (points.cols() != dim()) {
    throw InvalidArgument("gaussian: point dimension mismatch");
  }
  if (!points.allFinite()) throw InvalidArgument("gaussian: non-finite point");
  Eigen::MatrixXd centered = points.transpose();
  centered.colwise() -= mean_;
  chol_.triangularView<Eigen::Lower>().solveInPlace(centered);
  const double constant = static_cast<double>(dim()) * kLog2Pi + log_det_;
  return (-0.5 * (centered.colwise().squaredNorm().array() + constant))
      .transpose();
}

Eigen::MatrixXd Gaussian::solve(
    const Eigen::Ref<const Eigen::MatrixXd>& rhs) const {
  Eigen::MatrixXd out = chol_.triangularView<Eigen::Lower>().solve(rhs);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(out);
  return out;
}

double kl_divergence(const Gaussian& p, const Gaussian& q) {
  if (p.dim() != q.dim()) {
    throw InvalidArgument("kl_divergence: dimension mismatch");
  }
  const auto lq = q.chol().triangularView<Eigen::Lower>();
  // tr(Σq^{-1} Σp) = ||Lq^{-1} Lp||_F^2
  const Eigen::MatrixXd m = lq.solve(p.chol());
  const Eigen::VectorXd z = lq.solve(q.mean() - p.mean());
  const double d = static_cast<double>(p.dim());
  const double kl =
      0.5 * (m.squaredNorm() + z.squaredNorm() - d + q.log_det() - p.log_det());
  return std::max(kl, 0.0);
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& a) {
  if (!a.allFinite()) throw NumericalError("sqrt_psd: non-finite matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("sqrt_psd: eigendecomposition failed");
  }
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() *
         eig.eigenvectors().transpose();
}

double ground_distance(const Gaussian& p, const Gaussian& q) {
  if (p.dim() != q.dim()) {
    throw InvalidArgument("ground_distance: dimension mismatch");
  }
  const double mean_part = (p.mean() - q.mean()).norm();
  const double cov_part = (sqrt_psd(p.cov()) - sqrt_psd(q.cov())).norm();
  return mean_part + cov_part;
}

Gaussian kl_barycenter(std::span<const Gaussian> gs,
                       std::span<const double> lambdas) {
  if (gs.empty()) throw InvalidArgument("kl_barycenter: empty input");
  if (gs.size() != lambdas.size()) {
    throw InvalidArgument("kl_barycenter: weight count mismatch");
  }
  double total = 0.0;
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw InvalidArgument("kl_barycenter: negative weight");
    total += l;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("kl_barycenter: weights do not sum to 1");
  }
  const Eigen::Index d = gs.front().dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (std::size_t m = 0; m < gs.size(); ++m) {
    if (gs[m].dim() != d) {
      throw InvalidArgument("kl_barycenter: dimension mismatch");
    }
    if (lambdas[m] > 0.0) mean += lambdas[m] * gs[m].mean();
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t m = 0; m < gs.size(); ++m) {
    if (lambdas[m] == 0.0) continue;
    const Eigen::VectorXd delta = gs[m].mean() - mean;
    cov += lambdas[m] * (gs[m].cov() + delta * delta.transpose());
  }
  return Gaussian(std::move(mean), std::move(cov));
}

}  // namespace scgmm
