#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "scgmm/gaussian.hpp"
#include "scgmm/mixture.hpp"

namespace scgmm::testing {

inline Eigen::MatrixXd random_spd(Eigen::Index d, std::mt19937_64& rng,
                                  double floor = 0.1) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = normal(rng);
  }
  Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(d) +
                      floor * Eigen::MatrixXd::Identity(d, d);
  return 0.5 * (s + s.transpose());
}

inline Eigen::VectorXd random_vector(Eigen::Index d, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

inline Gaussian random_gaussian(Eigen::Index d, std::mt19937_64& rng,
                                double mean_scale = 1.0) {
  return Gaussian(random_vector(d, rng, mean_scale), random_spd(d, rng));
}

inline std::vector<double> random_simplex(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(k);
  double total = 0.0;
  for (double& x : w) {
    x = expo(rng);
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

inline Mixture random_mixture(std::size_t k, Eigen::Index d, std::mt19937_64& rng,
                              double mean_scale = 3.0) {
  std::vector<Gaussian> comps;
  for (std::size_t i = 0; i < k; ++i) comps.push_back(random_gaussian(d, rng, mean_scale));
  return Mixture(random_simplex(k, rng), std::move(comps));
}

inline Gaussian g1(double mean, double var) { return Gaussian::univariate(mean, var); }

inline Mixture mix1(std::vector<double> w, std::vector<std::pair<double, double>> params) {
  std::vector<Gaussian> comps;
  for (auto [m, v] : params) comps.push_back(g1(m, v));
  return Mixture(std::move(w), std::move(comps));
}

}  // namespace scgmm::testing
