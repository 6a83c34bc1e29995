#include "scgmm/metrics.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "scgmm/error.hpp"
#include "scgmm/ot.hpp"

namespace scgmm::metrics {

Clustering Clustering::from_labels(std::vector<int> labels) {
  int top = -1;
  for (int l : labels) {
    if (l < 0) throw InvalidArgument("clustering: negative label");
    top = std::max(top, l);
  }
  return Clustering{std::move(labels), top + 1};
}

double w1_distance(const Mixture& estimate, const Mixture& truth) {
  if (estimate.dim() != truth.dim()) {
    throw InvalidArgument("w1_distance: dimension mismatch");
  }
  // Square roots are shared across all pairs.
  std::vector<Eigen::MatrixXd> roots_a;
  std::vector<Eigen::MatrixXd> roots_b;
  for (const auto& c : estimate.components()) roots_a.push_back(sqrt_psd(c.cov()));
  for (const auto& c : truth.components()) roots_b.push_back(sqrt_psd(c.cov()));
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(estimate.order()),
                       static_cast<Eigen::Index>(truth.order()));
  for (std::size_t i = 0; i < estimate.order(); ++i) {
    for (std::size_t j = 0; j < truth.order(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (estimate.component(i).mean() - truth.component(j).mean()).norm() +
          (roots_a[i] - roots_b[j]).norm();
    }
  }
  return ot::solve_ot(cost, estimate.weights(), truth.weights()).objective;
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<int>(cost.rows());
  if (cost.cols() != cost.rows()) {
    throw InvalidArgument("hungarian: cost matrix must be square");
  }
  if (!cost.allFinite()) throw InvalidArgument("hungarian: non-finite cost");
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials and matching with 1-based sentinels at index 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (match[j] > 0) assignment[match[j] - 1] = j - 1;
  }
  return assignment;
}

std::vector<int> align_labels(const Mixture& estimate, const Mixture& truth) {
  if (estimate.order() != truth.order()) {
    throw InvalidArgument(
        "align_labels: estimate and truth have different orders");
  }
  if (estimate.dim() != truth.dim()) {
    throw InvalidArgument("align_labels: dimension mismatch");
  }
  const auto k = static_cast<Eigen::Index>(truth.order());
  Eigen::MatrixXd cost(k, k);
  for (Eigen::Index t = 0; t < k; ++t) {
    for (Eigen::Index e = 0; e < k; ++e) {
      cost(t, e) = kl_divergence(truth.component(static_cast<std::size_t>(t)),
                                 estimate.component(static_cast<std::size_t>(e)));
    }
  }
  return hungarian(cost);
}

double misclassification_rate(const Mixture& estimate,
                              const LabeledSample& sample,
                              const std::vector<int>& alignment) {
  if (!sample.labels) {
    throw InvalidArgument("misclassification_rate: sample has no labels");
  }
  if (sample.labels->size() != static_cast<std::size_t>(sample.size())) {
    throw InvalidArgument("misclassification_rate: label count mismatch");
  }
  if (sample.size() == 0) return 0.0;
  const std::vector<int> predicted = estimate.classify_rows(sample.points);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int truth = (*sample.labels)[i];
    if (truth < 0 || truth >= static_cast<int>(alignment.size())) {
      throw InvalidArgument("misclassification_rate: label outside alignment");
    }
    if (alignment[static_cast<std::size_t>(truth)] != predicted[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

double ari(const Clustering& a, const Clustering& b) {
  if (a.labels.size() != b.labels.size()) {
    throw InvalidArgument("ari: clusterings have different lengths");
  }
  // Pair counts are integers; the index is evaluated as
  // (2 P T - 2 R C) / ((R + C) T - 2 R C), which is the usual formula
  // multiplied through by 2T, so small cases come out exact.
  using Count = long double;
  auto choose2 = [](Count n) { return n * (n - 1) / 2; };
  std::map<std::pair<int, int>, Count> table;
  std::map<int, Count> rows;
  std::map<int, Count> cols;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    table[{a.labels[i], b.labels[i]}] += 1;
    rows[a.labels[i]] += 1;
    cols[b.labels[i]] += 1;
  }
  Count pairs = 0;
  for (const auto& [key, count] : table) pairs += choose2(count);
  Count row_pairs = 0;
  for (const auto& [key, count] : rows) row_pairs += choose2(count);
  Count col_pairs = 0;
  for (const auto& [key, count] : cols) col_pairs += choose2(count);
  const Count total = choose2(static_cast<Count>(a.labels.size()));
  const Count cross = 2 * row_pairs * col_pairs;
  const Count numer = 2 * pairs * total - cross;
  const Count denom = (row_pairs + col_pairs) * total - cross;
  if (denom == 0) return 1.0;
  return static_cast<double>(numer / denom);
}

}  // namespace scgmm::metrics
