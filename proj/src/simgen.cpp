#include "scgmm/simgen.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "scgmm/error.hpp"
#include "scgmm/rng.hpp"

namespace scgmm::simgen {

namespace {

constexpr int kMaxSteps = 60;
constexpr double kAcceptRelTol = 0.05;
// Bisection keeps going until this much tighter band, then accepts anything
// inside kAcceptRelTol at the end.
constexpr double kTargetRelTol = 0.01;

// Fraction of `draws` (rows from component `from`) for which
// w_to phi_to(x) > w_from phi_from(x).
double misclassified_fraction(const Mixture& g, std::size_t from, std::size_t to,
                              const Eigen::MatrixXd& draws) {
  const Eigen::VectorXd own = g.component(from).log_density_rows(draws).array() +
                              std::log(g.weight(from));
  const Eigen::VectorXd other = g.component(to).log_density_rows(draws).array() +
                                std::log(g.weight(to));
  return static_cast<double>((own.array() < other.array()).count()) /
         static_cast<double>(draws.rows());
}

Eigen::MatrixXd draw(const Gaussian& c, std::size_t n, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(c.dim(), static_cast<Eigen::Index>(n));
  for (Eigen::Index col = 0; col < z.cols(); ++col) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, col) = normal(engine);
  }
  Eigen::MatrixXd x = c.chol().triangularView<Eigen::Lower>() * z;
  x.colwise() += c.mean();
  return x.transpose();
}

Eigen::MatrixXd random_orthogonal(Eigen::Index d, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = normal(engine);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  // Sign fix so Q is Haar distributed.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

Mixture base_model(const OverlapSpec& spec) {
  Engine engine = make_engine(spec.seed, "simgen.model");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> eigen(0.05, 1.0);
  std::exponential_distribution<double> expo(1.0);
  const auto d = static_cast<Eigen::Index>(spec.d);
  const auto k = static_cast<std::size_t>(spec.K);

  std::vector<double> raw(k);
  double raw_total = 0.0;
  for (double& r : raw) {
    r = expo(engine);
    raw_total += r;
  }
  std::vector<double> weights(k);
  for (std::size_t i = 0; i < k; ++i) {
    weights[i] = 0.5 / static_cast<double>(k) + 0.5 * raw[i] / raw_total;
  }

  std::vector<Gaussian> comps;
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::VectorXd mean(d);
    for (Eigen::Index j = 0; j < d; ++j) mean[j] = unit(engine);
    const Eigen::MatrixXd q = random_orthogonal(d, engine);
    Eigen::VectorXd e(d);
    for (Eigen::Index j = 0; j < d; ++j) e[j] = eigen(engine);
    Eigen::MatrixXd cov = q * e.asDiagonal() * q.transpose();
    comps.emplace_back(std::move(mean), 0.5 * (cov + cov.transpose()));
  }
  return Mixture(std::move(weights), std::move(comps));
}

}  // namespace

std::pair<double, double> pairwise_overlap(const Mixture& g, std::size_t i,
                                           std::size_t j, std::size_t mc_samples,
                                           std::uint64_t seed) {
  if (i == j) throw InvalidArgument("pairwise_overlap: i == j");
  if (i >= g.order() || j >= g.order()) {
    throw InvalidArgument("pairwise_overlap: component index out of range");
  }
  if (mc_samples < 1) throw InvalidArgument("pairwise_overlap: mc_samples < 1");
  Engine from_i = make_engine(seed, "simgen.overlap", 2 * i);
  Engine from_j = make_engine(seed, "simgen.overlap", 2 * j + 1);
  const Eigen::MatrixXd xi = draw(g.component(i), mc_samples, from_i);
  const Eigen::MatrixXd xj = draw(g.component(j), mc_samples, from_j);
  return {misclassified_fraction(g, i, j, xi), misclassified_fraction(g, j, i, xj)};
}

double max_omega(const Mixture& g, std::size_t mc_samples, std::uint64_t seed) {
  double best = 0.0;
  for (std::size_t i = 0; i < g.order(); ++i) {
    for (std::size_t j = i + 1; j < g.order(); ++j) {
      const auto [a, b] =
          pairwise_overlap(g, i, j, mc_samples, derive_seed(seed, "simgen.pair", i, j));
      best = std::max(best, a + b);
    }
  }
  return best;
}

Mixture scale_covariances(const Mixture& g, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("scale_covariances: scale <= 0");
  std::vector<Gaussian> comps;
  for (const auto& c : g.components()) comps.emplace_back(c.mean(), scale * c.cov());
  return Mixture(g.weights(), std::move(comps));
}

std::uint64_t overlap_seed(const OverlapSpec& spec) {
  return derive_seed(spec.seed, "simgen.mc");
}

Mixture generate(const OverlapSpec& spec, GenerateTrace* trace) {
  if (spec.d < 1 || spec.K < 2) {
    throw InvalidArgument("simgen: need d >= 1 and K >= 2");
  }
  if (!(spec.max_omega > 0.0 && spec.max_omega < 1.0)) {
    throw InvalidArgument("simgen: max_omega must lie in (0, 1)");
  }
  const Mixture base = base_model(spec);
  const std::uint64_t mc_seed = overlap_seed(spec);
  const double target = spec.max_omega;

  GenerateTrace local;
  GenerateTrace& tr = trace ? *trace : local;
  tr.evaluations.clear();
  auto evaluate = [&](double log_scale) {
    const double scale = std::exp(log_scale);
    const double omega =
        max_omega(scale_covariances(base, scale), spec.mc_samples, mc_seed);
    tr.evaluations.emplace_back(scale, omega);
    return omega;
  };
  auto close_enough = [&](double omega, double tol) {
    return std::abs(omega - target) <= tol * target;
  };

  double lo = 0.0;
  double hi = 0.0;
  double omega_lo = evaluate(0.0);
  double omega_hi = omega_lo;
  double best_scale = 1.0;
  double best_omega = omega_lo;
  auto remember = [&](double log_scale, double omega) {
    if (std::abs(omega - target) < std::abs(best_omega - target)) {
      best_omega = omega;
      best_scale = std::exp(log_scale);
    }
  };

  int steps = 0;
  // Bracket: omega(lo) <= target <= omega(hi), doubling the scale outward.
  if (omega_lo < target) {
    while (omega_hi < target) {
      if (++steps > kMaxSteps) break;
      lo = hi;
      omega_lo = omega_hi;
      hi += std::log(2.0);
      omega_hi = evaluate(hi);
      remember(hi, omega_hi);
    }
  } else {
    while (omega_lo > target) {
      if (++steps > kMaxSteps) break;
      hi = lo;
      omega_hi = omega_lo;
      lo -= std::log(2.0);
      omega_lo = evaluate(lo);
      remember(lo, omega_lo);
    }
  }

  for (; steps <= kMaxSteps && !close_enough(best_omega, kTargetRelTol);
       ++steps) {
    const double mid = 0.5 * (lo + hi);
    const double omega = evaluate(mid);
    remember(mid, omega);
    if (omega < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  if (!close_enough(best_omega, kAcceptRelTol)) {
    double min_seen = 1.0;
    double max_seen = 0.0;
    for (const auto& [s, o] : tr.evaluations) {
      min_seen = std::min(min_seen, o);
      max_seen = std::max(max_seen, o);
    }
    std::ostringstream msg;
    msg << "simgen: MaxOmega target " << target << " unreachable; achieved range ["
        << min_seen << ", " << max_seen << "], closest " << best_omega;
    throw NumericalError(msg.str());
  }
  tr.scale = best_scale;
  tr.achieved = best_omega;
  return scale_covariances(base, best_scale);
}

}  // namespace scgmm::simgen
