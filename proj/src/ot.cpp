#include "scgmm/ot.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "scgmm/error.hpp"

namespace scgmm::ot {

namespace {

constexpr double kMarginalTol = 1e-9;

void check_marginal(std::span<const double> m, Eigen::Index expected,
                    const char* name) {
  if (static_cast<Eigen::Index>(m.size()) != expected) {
    throw InvalidArgument(std::string("solve_ot: ") + name +
                          " length does not match cost matrix");
  }
  double total = 0.0;
  for (double x : m) {
    if (!std::isfinite(x) || x < 0.0) {
      throw InvalidArgument(std::string("solve_ot: ") + name +
                            " has a negative or non-finite entry");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kMarginalTol) {
    std::ostringstream msg;
    msg << "solve_ot: " << name << " sums to " << total << ", not 1";
    throw InvalidArgument(msg.str());
  }
}

void check_cost(const Eigen::MatrixXd& cost) {
  if (cost.rows() < 1 || cost.cols() < 1) {
    throw InvalidArgument("ot: empty cost matrix");
  }
  if (!cost.allFinite() || (cost.array() < 0.0).any()) {
    throw InvalidArgument("ot: costs must be finite and nonnegative");
  }
}

// Transportation simplex on a balanced problem with strictly positive
// supplies and demands. Basis = spanning tree over n row nodes and m column
// nodes (n + m - 1 cells, degenerate zeros allowed). Entering and leaving
// cells follow Bland's rule on the row-major cell index.
class TransportationSimplex {
 public:
  TransportationSimplex(const Eigen::MatrixXd& cost, std::vector<double> supply,
                        std::vector<double> demand)
      : cost_(cost),
        n_(cost.rows()),
        m_(cost.cols()),
        supply_(std::move(supply)),
        demand_(std::move(demand)),
        flow_(static_cast<std::size_t>(n_ * m_), 0.0),
        basic_(static_cast<std::size_t>(n_ * m_), false) {
    const double scale = std::max(1.0, cost_.maxCoeff());
    eps_ = 1e-12 * scale;
  }

  Eigen::MatrixXd solve() {
    northwest_corner();
    const long max_pivots = 100L * (n_ * m_ + n_ + m_) + 1000;
    for (long pivot = 0;; ++pivot) {
      if (pivot > max_pivots) {
        throw NumericalError("solve_ot: pivot limit exceeded");
      }
      compute_potentials();
      const Eigen::Index entering = find_entering();
      if (entering < 0) break;
      pivot_on(entering);
    }
    Eigen::MatrixXd plan(n_, m_);
    for (Eigen::Index r = 0; r < n_; ++r) {
      for (Eigen::Index c = 0; c < m_; ++c) {
        plan(r, c) = std::max(0.0, flow_[cell(r, c)]);
      }
    }
    return plan;
  }

 private:
  std::size_t cell(Eigen::Index r, Eigen::Index c) const {
    return static_cast<std::size_t>(r * m_ + c);
  }

  void northwest_corner() {
    std::vector<double> rs = supply_;
    std::vector<double> rd = demand_;
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    while (true) {
      const auto ur = static_cast<std::size_t>(r);
      const auto uc = static_cast<std::size_t>(c);
      const double q = std::min(rs[ur], rd[uc]);
      basic_[cell(r, c)] = true;
      flow_[cell(r, c)] = q;
      rs[ur] -= q;
      rd[uc] -= q;
      if (r == n_ - 1 && c == m_ - 1) break;
      if (r == n_ - 1) {
        ++c;
      } else if (c == m_ - 1) {
        ++r;
      } else if (rs[ur] <= rd[uc]) {
        ++r;
      } else {
        ++c;
      }
    }
  }

  // Adjacency over nodes 0..n-1 (rows) and n..n+m-1 (columns); each edge
  // carries its cell index.
  std::vector<std::vector<std::pair<Eigen::Index, std::size_t>>> tree() const {
    std::vector<std::vector<std::pair<Eigen::Index, std::size_t>>> adj(
        static_cast<std::size_t>(n_ + m_));
    for (Eigen::Index r = 0; r < n_; ++r) {
      for (Eigen::Index c = 0; c < m_; ++c) {
        if (!basic_[cell(r, c)]) continue;
        adj[static_cast<std::size_t>(r)].emplace_back(n_ + c, cell(r, c));
        adj[static_cast<std::size_t>(n_ + c)].emplace_back(r, cell(r, c));
      }
    }
    return adj;
  }

  void compute_potentials() {
    const auto adj = tree();
    u_.assign(static_cast<std::size_t>(n_), 0.0);
    v_.assign(static_cast<std::size_t>(m_), 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(n_ + m_), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const Eigen::Index node = stack.back();
      stack.pop_back();
      for (const auto& [next, idx] : adj[static_cast<std::size_t>(node)]) {
        if (seen[static_cast<std::size_t>(next)]) continue;
        seen[static_cast<std::size_t>(next)] = true;
        const Eigen::Index r = static_cast<Eigen::Index>(idx) / m_;
        const Eigen::Index c = static_cast<Eigen::Index>(idx) % m_;
        if (next >= n_) {
          v_[static_cast<std::size_t>(c)] = cost_(r, c) - u_[static_cast<std::size_t>(r)];
        } else {
          u_[static_cast<std::size_t>(r)] = cost_(r, c) - v_[static_cast<std::size_t>(c)];
        }
        stack.push_back(next);
      }
    }
    for (bool s : seen) {
      if (!s) throw NumericalError("solve_ot: basis is not a spanning tree");
    }
  }

  Eigen::Index find_entering() const {
    for (Eigen::Index r = 0; r < n_; ++r) {
      for (Eigen::Index c = 0; c < m_; ++c) {
        if (basic_[cell(r, c)]) continue;
        const double reduced = cost_(r, c) - u_[static_cast<std::size_t>(r)] -
                               v_[static_cast<std::size_t>(c)];
        if (reduced < -eps_) return r * m_ + c;
      }
    }
    return -1;
  }

  // Tree path from row node `from` to column node `to`, as cell indices
  // in order of traversal.
  std::vector<std::size_t> tree_path(Eigen::Index from, Eigen::Index to) const {
    const auto adj = tree();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n_ + m_), -1);
    std::vector<std::size_t> via(static_cast<std::size_t>(n_ + m_), 0);
    std::vector<Eigen::Index> stack{from};
    parent[static_cast<std::size_t>(from)] = from;
    while (!stack.empty()) {
      const Eigen::Index node = stack.back();
      stack.pop_back();
      if (node == to) break;
      for (const auto& [next, idx] : adj[static_cast<std::size_t>(node)]) {
        if (parent[static_cast<std::size_t>(next)] != -1) continue;
        parent[static_cast<std::size_t>(next)] = node;
        via[static_cast<std::size_t>(next)] = idx;
        stack.push_back(next);
      }
    }
    if (parent[static_cast<std::size_t>(to)] == -1) {
      throw NumericalError("solve_ot: no cycle through entering cell");
    }
    std::vector<std::size_t> path;
    for (Eigen::Index node = to; node != from;
         node = parent[static_cast<std::size_t>(node)]) {
      path.push_back(via[static_cast<std::size_t>(node)]);
    }
    // path now runs from the column end back to the row end.
    return path;
  }

  void pivot_on(Eigen::Index entering) {
    const Eigen::Index r = entering / m_;
    const Eigen::Index c = entering % m_;
    // Edges from column c back to row r; signs alternate -, +, -, ...
    const std::vector<std::size_t> path = tree_path(r, n_ + c);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = 0;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const std::size_t idx = path[k];
      if (flow_[idx] < theta || (flow_[idx] == theta && idx < leaving)) {
        theta = flow_[idx];
        leaving = idx;
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t k = 0; k < path.size(); ++k) {
      flow_[path[k]] += (k % 2 == 0) ? -theta : theta;
      if (flow_[path[k]] < 0.0) flow_[path[k]] = 0.0;
    }
    flow_[static_cast<std::size_t>(entering)] = theta;
    flow_[leaving] = 0.0;
    basic_[leaving] = false;
    basic_[static_cast<std::size_t>(entering)] = true;
  }

  const Eigen::MatrixXd& cost_;
  Eigen::Index n_;
  Eigen::Index m_;
  std::vector<double> supply_;
  std::vector<double> demand_;
  std::vector<double> flow_;
  std::vector<bool> basic_;
  std::vector<double> u_;
  std::vector<double> v_;
  double eps_ = 0.0;
};

}  // namespace

TransportPlan solve_ot(const Eigen::MatrixXd& cost, std::span<const double> w,
                       std::span<const double> v) {
  check_cost(cost);
  check_marginal(w, cost.rows(), "source marginal");
  check_marginal(v, cost.cols(), "target marginal");

  std::vector<Eigen::Index> rows;
  std::vector<Eigen::Index> cols;
  std::vector<double> supply;
  std::vector<double> demand;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) {
      rows.push_back(static_cast<Eigen::Index>(i));
      supply.push_back(w[i]);
    }
  }
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] > 0.0) {
      cols.push_back(static_cast<Eigen::Index>(j));
      demand.push_back(v[j]);
    }
  }
  // Balance the reduced problem exactly by rescaling the demand.
  double supply_total = 0.0;
  double demand_total = 0.0;
  for (double x : supply) supply_total += x;
  for (double x : demand) demand_total += x;
  for (double& x : demand) x *= supply_total / demand_total;

  Eigen::MatrixXd reduced(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      reduced(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          cost(rows[r], cols[c]);
    }
  }
  TransportationSimplex simplex(reduced, std::move(supply), std::move(demand));
  const Eigen::MatrixXd sub = simplex.solve();

  TransportPlan out;
  out.plan = Eigen::MatrixXd::Zero(cost.rows(), cost.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out.plan(rows[r], cols[c]) =
          sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  out.objective = (out.plan.array() * cost.array()).sum();
  return out;
}

TransportPlan relaxed_plan(const Eigen::MatrixXd& cost,
                           std::span<const double> w) {
  check_cost(cost);
  if (static_cast<Eigen::Index>(w.size()) != cost.rows()) {
    throw InvalidArgument("relaxed_plan: marginal length does not match cost");
  }
  TransportPlan out;
  out.plan = Eigen::MatrixXd::Zero(cost.rows(), cost.cols());
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < cost.cols(); ++j) {
      if (cost(i, j) < cost(i, best)) best = j;
    }
    const double mass = w[static_cast<std::size_t>(i)];
    out.plan(i, best) = mass;
    out.objective += mass * cost(i, best);
  }
  return out;
}

}  // namespace scgmm::ot
