#include "featmatch/lap.hpp"
#include "featmatch/search.hpp"
#include "solver_util.hpp"

namespace featmatch {

namespace {

// Per-cluster sufficient statistics: vector sum, member count, and sum of
// squared norms.
struct ClusterStats {
  Eigen::MatrixXd sums;
  Eigen::VectorXd counts;
  Eigen::VectorXd sq_norms;

  ClusterStats(Eigen::Index p, int clusters)
      : sums(Eigen::MatrixXd::Zero(p, clusters)),
        counts(Eigen::VectorXd::Zero(clusters)),
        sq_norms(Eigen::VectorXd::Zero(clusters)) {}

  void update(const Eigen::MatrixXd& x, const std::vector<int>& labels, double sign) {
    for (Eigen::Index q = 0; q < x.cols(); ++q) {
      const int label = labels[static_cast<std::size_t>(q)];
      if (label == 0) continue;
      sums.col(label - 1) += sign * x.col(q);
      counts(label - 1) += sign;
      sq_norms(label - 1) += sign * x.col(q).squaredNorm();
    }
  }

  double objective() const {
    double total = 0.0;
    for (Eigen::Index k = 0; k < sums.cols(); ++k) total += counts(k) * sq_norms(k) - sums.col(k).squaredNorm();
    return std::max(0.0, total);
  }
};

double labels_cost(const Eigen::MatrixXd& cost, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t q = 0; q < labels.size(); ++q) {
    if (labels[q] != 0) total += cost(static_cast<Eigen::Index>(q), labels[q] - 1);
  }
  return total;
}

// Minimum-cost injective placement of a unit's vectors into clusters.
std::vector<int> best_labels(const Eigen::MatrixXd& cost) {
  const Eigen::Index rows = cost.rows();
  const Eigen::Index clusters = cost.cols();
  std::vector<int> labels(static_cast<std::size_t>(rows), 0);
  if (rows <= clusters) {
    const Assignment a = lap_min_rect(cost);
    for (std::size_t q = 0; q < a.assign.size(); ++q) labels[q] = a.assign[q] + 1;
  } else {
    const Eigen::MatrixXd transposed = cost.transpose();
    const Assignment a = lap_min_rect(transposed);
    for (std::size_t k = 0; k < a.assign.size(); ++k) labels[static_cast<std::size_t>(a.assign[k])] = static_cast<int>(k) + 1;
  }
  return labels;
}

}  // namespace

PartialSolveResult bca_unbalanced(const UnbalancedStack& data, const PartialMatching& start,
                                  const SolveOptions& opts) {
  detail::Stopwatch watch;
  validate(data, start);
  const int K = data.clusters();

  PartialSolveResult out;
  out.matching = start;
  auto& labels = out.matching.labels;
  auto rebuild = [&] {
    ClusterStats stats(data.p(), K);
    for (std::size_t i = 0; i < data.n(); ++i) stats.update(data.unit(i), labels[i], 1.0);
    return stats;
  };
  double value = rebuild().objective();
  out.history.push_back(value);
  if (data.n() == 1) {
    out.converged = true;
    out.objective = value;
    out.seconds = watch.seconds();
    return out;
  }

  detail::SweepSchedule schedule(data.n(), opts);
  while (out.sweeps < opts.max_sweeps) {
    if (detail::past_deadline(opts)) {
      out.timed_out = true;
      break;
    }
    const PartialMatching before = out.matching;
    ClusterStats stats = rebuild();
    bool changed = false;
    for (std::size_t i : schedule.next()) {
      const Eigen::MatrixXd& x = data.unit(i);
      stats.update(x, labels[i], -1.0);
      // cost(q, k) = sum over members y of cluster k of ||x_q - y||^2
      const Eigen::VectorXd norms = x.colwise().squaredNorm().transpose();
      Eigen::MatrixXd cost = norms * stats.counts.transpose() - 2.0 * x.transpose() * stats.sums;
      cost.rowwise() += stats.sq_norms.transpose();
      std::vector<int> next = best_labels(cost);
      if (labels_cost(cost, next) < labels_cost(cost, labels[i])) {
        labels[i] = std::move(next);
        changed = true;
      }
      stats.update(x, labels[i], 1.0);
    }
    // an unchanged sweep would only differ from `value` by rounding
    const double next_value = changed ? rebuild().objective() : value;
    ++out.sweeps;
    if (detail::decreased(next_value, value, opts.rel_tol)) {
      value = next_value;
      out.history.push_back(value);
    } else {
      if (next_value > value) out.matching = before;
      out.history.push_back(std::min(value, next_value));
      out.converged = true;
      break;
    }
  }
  out.objective = objective_unbalanced(data, out.matching);
  out.seconds = watch.seconds();
  return out;
}

}  // namespace featmatch
