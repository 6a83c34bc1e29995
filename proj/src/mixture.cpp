#include "scgmm/mixture.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "scgmm/error.hpp"
#include "scgmm/rng.hpp"

namespace scgmm {

namespace {

constexpr double kWeightSumTol = 1e-9;
constexpr double kWeightFloor = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Mixture::Mixture(std::vector<double> weights, std::vector<Gaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) {
    throw InvalidArgument("mixture: needs at least one component");
  }
  if (weights_.size() != components_.size()) {
    throw InvalidArgument("mixture: weight count does not match components");
  }
  const Eigen::Index d = components_.front().dim();
  for (const auto& c : components_) {
    if (c.dim() != d) {
      throw InvalidArgument("mixture: components differ in dimension");
    }
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidArgument("mixture: weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTol) {
    throw InvalidArgument("weights do not sum to 1");
  }
  bool clamped = false;
  for (double& w : weights_) {
    if (w > 0.0 && w < kWeightFloor) {
      w = 0.0;
      clamped = true;
    }
  }
  if (clamped) {
    double kept = 0.0;
    for (double w : weights_) kept += w;
    for (double& w : weights_) w /= kept;
  }
}

Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double top = m.row(i).maxCoeff();
    if (top == kNegInf) {
      out[i] = kNegInf;
      continue;
    }
    out[i] = top + std::log((m.row(i).array() - top).exp().sum());
  }
  return out;
}

Eigen::MatrixXd Mixture::weighted_log_densities(
    const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  if (points.cols() != dim()) {
    throw InvalidArgument("mixture: point dimension mismatch");
  }
  Eigen::MatrixXd out(points.rows(), static_cast<Eigen::Index>(order()));
  for (std::size_t k = 0; k < order(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    if (weights_[k] == 0.0) {
      if (!points.allFinite()) {
        throw InvalidArgument("gaussian: non-finite point");
      }
      out.col(col).setConstant(kNegInf);
    } else {
      out.col(col) = components_[k].log_density_rows(points).array() +
                     std::log(weights_[k]);
    }
  }
  return out;
}

double Mixture::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return log_density_rows(x.transpose())[0];
}

Eigen::VectorXd Mixture::log_density_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  return log_sum_exp_rows(weighted_log_densities(points));
}

int Mixture::classify(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return classify_rows(x.transpose()).front();
}

std::vector<int> Mixture::classify_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  const Eigen::MatrixXd scores = weighted_log_densities(points);
  std::vector<int> labels(static_cast<std::size_t>(points.rows()), 0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > scores(i, best)) best = static_cast<int>(k);
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

LabeledSample Mixture::sample(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw InvalidArgument("sample: n must be >= 1");
  Engine engine = make_engine(seed, "mixture.sample");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> cumulative(order());
  double acc = 0.0;
  for (std::size_t k = 0; k < order(); ++k) {
    acc += weights_[k];
    cumulative[k] = acc;
  }
  // Last positive-weight component absorbs the rounding tail.
  std::size_t last = 0;
  for (std::size_t k = 0; k < order(); ++k) {
    if (weights_[k] > 0.0) last = k;
  }

  const Eigen::Index d = dim();
  LabeledSample out;
  out.points.resize(static_cast<Eigen::Index>(n), d);
  out.labels.emplace(n);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform(engine) * acc;
    std::size_t k = 0;
    while (k < last && (cumulative[k] <= u || weights_[k] == 0.0)) ++k;
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(engine);
    const Gaussian& g = components_[k];
    out.points.row(static_cast<Eigen::Index>(i)) =
        (g.mean() + g.chol().triangularView<Eigen::Lower>() * z).transpose();
    (*out.labels)[i] = static_cast<int>(k);
  }
  return out;
}

}  // namespace scgmm
