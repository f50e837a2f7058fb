#include "featmatch/search.hpp"

#include "featmatch/lap.hpp"
#include "solver_util.hpp"

#include <deque>
#include <limits>

namespace featmatch {

namespace {

using detail::decreased;
using detail::increased;
using detail::past_deadline;
using detail::Stopwatch;

double assignment_score(const Eigen::MatrixXd& scores, const Permutation& perm) {
  double total = 0.0;
  for (std::size_t k = 0; k < perm.size(); ++k) total += scores(static_cast<Eigen::Index>(k), perm[k]);
  return total;
}

// Best permutation against `scores`, keeping `current` unless the LAP
// strictly beats it.
Permutation best_or_current(const Eigen::MatrixXd& scores, const Permutation& current) {
  Assignment best = lap_max(scores);
  if (best.value > assignment_score(scores, current)) return std::move(best.assign);
  return current;
}

SolveResult trivial_result(const FeatureStack& data, const Matching& start, const Stopwatch& watch) {
  SolveResult out;
  out.matching = start;
  out.surrogate = frobenius_surrogate(data, start);
  out.objective = objective_from_surrogate(data, out.surrogate);
  out.converged = true;
  out.history = {out.surrogate};
  out.seconds = watch.seconds();
  return out;
}

// Rank matching: cluster holding the r-th smallest center gets the r-th
// smallest value of the unit.
Permutation rank_match(const Eigen::RowVectorXd& values, const Eigen::RowVectorXd& centers) {
  const auto m = static_cast<std::size_t>(values.size());
  std::vector<int> by_value(m), by_center(m);
  std::iota(by_value.begin(), by_value.end(), 0);
  std::iota(by_center.begin(), by_center.end(), 0);
  std::stable_sort(by_value.begin(), by_value.end(), [&](int a, int b) { return values(a) < values(b); });
  std::stable_sort(by_center.begin(), by_center.end(), [&](int a, int b) { return centers(a) < centers(b); });
  Permutation perm(m);
  for (std::size_t r = 0; r < m; ++r) perm[static_cast<std::size_t>(by_center[r])] = by_value[r];
  return perm;
}

}  // namespace

Matching sort_match_1d(const FeatureStack& data, const Matching& current) {
  if (data.p() != 1) throw InvalidInput("rank matching requires scalar features (p = 1)");
  const Eigen::RowVectorXd centers = cluster_centers(data, current).row(0);
  Matching out;
  out.perms.reserve(data.n());
  for (const auto& x : data.units()) out.perms.push_back(rank_match(x.row(0), centers));
  return out;
}

SolveResult kmeans_match(const FeatureStack& data, const Matching& start, const SolveOptions& opts) {
  Stopwatch watch;
  validate(data, start);
  if (data.n() == 1) return trivial_result(data, start, watch);

  SolveResult out;
  out.matching = start;
  double value = objective_pairwise(data, start);
  out.history.push_back(value);

  while (out.sweeps < opts.max_sweeps) {
    if (past_deadline(opts)) {
      out.timed_out = true;
      break;
    }
    Matching next;
    if (data.p() == 1) {
      next = sort_match_1d(data, out.matching);
    } else {
      const Eigen::MatrixXd centers = cluster_centers(data, out.matching);
      next.perms.reserve(data.n());
      for (std::size_t i = 0; i < data.n(); ++i) {
        const Eigen::MatrixXd scores = centers.transpose() * data.unit(i);
        next.perms.push_back(best_or_current(scores, out.matching.perms[i]));
      }
    }
    const double next_value = objective_pairwise(data, next);
    ++out.sweeps;
    if (decreased(next_value, value, opts.rel_tol)) {
      out.matching = std::move(next);
      value = next_value;
      out.history.push_back(value);
    } else {
      out.history.push_back(std::min(value, next_value));
      if (next_value <= value) out.matching = std::move(next);
      out.converged = true;
      break;
    }
  }
  out.surrogate = frobenius_surrogate(data, out.matching);
  out.objective = objective_from_surrogate(data, out.surrogate);
  out.seconds = watch.seconds();
  return out;
}

SolveResult bca(const FeatureStack& data, const Matching& start, const SolveOptions& opts) {
  Stopwatch watch;
  validate(data, start);
  if (data.n() == 1) return trivial_result(data, start, watch);

  SolveResult out;
  out.matching = start;
  detail::SweepSchedule schedule(data.n(), opts);
  double value = frobenius_surrogate(data, start);
  out.history.push_back(value);

  while (out.sweeps < opts.max_sweeps) {
    if (past_deadline(opts)) {
      out.timed_out = true;
      break;
    }
    const Matching before = out.matching;
    // Rebuilt each sweep so rounding from the rank updates cannot accumulate.
    Eigen::MatrixXd sum = running_sum(data, out.matching);
    bool changed = false;
    for (std::size_t i : schedule.next()) {
      const Eigen::MatrixXd& x = data.unit(i);
      Permutation& perm = out.matching.perms[i];
      const Eigen::MatrixXd others = sum - permute_columns(x, perm);
      const Eigen::MatrixXd scores = others.transpose() * x;  // (k, l) = <S_i col k, x_il>
      Permutation next = best_or_current(scores, perm);
      if (next != perm) {
        perm = std::move(next);
        changed = true;
      }
      sum = others + permute_columns(x, perm);
    }
    // an unchanged sweep would only differ from `value` by rounding
    const double next_value = changed ? running_sum(data, out.matching).squaredNorm() : value;
    ++out.sweeps;
    if (increased(next_value, value, opts.rel_tol)) {
      value = next_value;
      out.history.push_back(value);
    } else {
      if (next_value < value) out.matching = before;
      out.history.push_back(std::max(value, next_value));
      out.converged = true;
      break;
    }
  }
  out.surrogate = frobenius_surrogate(data, out.matching);
  out.objective = objective_from_surrogate(data, out.surrogate);
  out.seconds = watch.seconds();
  return out;
}

SolveResult frank_wolfe(const FeatureStack& data, const Matching& start, const SolveOptions& opts) {
  Stopwatch watch;
  validate(data, start);
  if (data.n() == 1) return trivial_result(data, start, watch);

  SolveResult out;
  out.matching = start;
  Eigen::MatrixXd sum = running_sum(data, start);
  double value = sum.squaredNorm();
  out.history.push_back(value);

  while (out.sweeps < opts.max_sweeps) {
    if (past_deadline(opts)) {
      out.timed_out = true;
      break;
    }
    Matching direction;
    direction.perms.reserve(data.n());
    Eigen::MatrixXd next_sum = Eigen::MatrixXd::Zero(data.p(), data.m());
    for (std::size_t i = 0; i < data.n(); ++i) {
      const Eigen::MatrixXd& x = data.unit(i);
      const Eigen::MatrixXd scores = sum.transpose() * x;
      direction.perms.push_back(best_or_current(scores, out.matching.perms[i]));
      next_sum += permute_columns(x, direction.perms.back());
    }
    const double next_value = next_sum.squaredNorm();
    ++out.sweeps;
    if (increased(next_value, value, opts.rel_tol)) {
      out.matching = std::move(direction);
      sum = std::move(next_sum);
      value = next_value;
      out.history.push_back(value);
    } else {
      out.history.push_back(value);
      out.converged = true;
      break;
    }
  }
  out.surrogate = frobenius_surrogate(data, out.matching);
  out.objective = objective_from_surrogate(data, out.surrogate);
  out.seconds = watch.seconds();
  return out;
}

SolveResult interchange(const FeatureStack& data, const Matching& start, const SolveOptions& opts) {
  Stopwatch watch;
  validate(data, start);
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto m = static_cast<int>(data.m());
  if (n == 1 || m == 1) return trivial_result(data, start, watch);

  SolveResult out;
  out.matching = start;
  auto& perms = out.matching.perms;
  const double scale = static_cast<double>(n) * data.total_sq_norm();
  Eigen::MatrixXd sum = running_sum(data, out.matching);
  double value = objective_from_surrogate(data, sum.squaredNorm());
  out.history.push_back(value);

  std::mt19937_64 rng(opts.seed);
  std::deque<int> candidates;
  auto reset_candidates = [&] {
    candidates.clear();
    for (int k = 0; k < m; ++k) candidates.push_back(k);
  };
  reset_candidates();
  int accepted = 0;
  out.converged = true;

  Eigen::MatrixXd diffs(data.p(), n);
  while (!candidates.empty()) {
    if (past_deadline(opts)) {
      out.timed_out = true;
      out.converged = false;
      break;
    }
    std::size_t pick = 0;
    if (opts.random_candidate) {
      std::uniform_int_distribution<std::size_t> dist(0, candidates.size() - 1);
      pick = dist(rng);
    }
    const int q = candidates[pick];

    double best_value = value;
    int best_r = -1;
    std::vector<int> best_keep;
    const double surrogate = sum.squaredNorm();
    for (int r : candidates) {
      if (r == q) continue;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& x = data.unit(static_cast<std::size_t>(i));
        const auto& perm = perms[static_cast<std::size_t>(i)];
        diffs.col(i) = x.col(perm[static_cast<std::size_t>(q)]) - x.col(perm[static_cast<std::size_t>(r)]);
      }
      const Eigen::VectorXd mean_diff = diffs.rowwise().mean();
      UbqpInstance inst{diffs.transpose() * diffs,
                        static_cast<double>(n) * (diffs.transpose() * mean_diff)};
      UbqpSolution sol = solve_ubqp(inst, opts.ubqp_exact_limit, opts.seed, opts.ubqp_restarts);
      const auto kept = std::count(sol.c.begin(), sol.c.end(), 1);
      if (kept == 0 || kept == n) continue;  // relabeling of the pair, not a swap

      // c_i = 1 keeps unit i's elements in place, c_i = 0 swaps them.
      Eigen::VectorXd col_q = Eigen::VectorXd::Zero(data.p());
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& x = data.unit(static_cast<std::size_t>(i));
        const auto& perm = perms[static_cast<std::size_t>(i)];
        col_q += x.col(perm[static_cast<std::size_t>(sol.c[static_cast<std::size_t>(i)] ? q : r)]);
      }
      const Eigen::VectorXd col_r = sum.col(q) + sum.col(r) - col_q;
      const double swapped_surrogate = surrogate - sum.col(q).squaredNorm() - sum.col(r).squaredNorm() +
                                       col_q.squaredNorm() + col_r.squaredNorm();
      const double swapped = std::max(0.0, scale - swapped_surrogate);
      if (decreased(swapped, best_value, opts.rel_tol)) {
        best_value = swapped;
        best_r = r;
        best_keep = std::move(sol.c);
      }
    }

    if (best_r >= 0) {
      for (std::size_t i = 0; i < perms.size(); ++i) {
        if (!best_keep[i]) std::swap(perms[i][static_cast<std::size_t>(q)], perms[i][static_cast<std::size_t>(best_r)]);
      }
      sum = running_sum(data, out.matching);
      value = objective_from_surrogate(data, sum.squaredNorm());
      out.history.push_back(value);
      ++accepted;
      if (accepted >= opts.max_sweeps) {
        out.converged = false;
        break;
      }
      reset_candidates();
    } else {
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    }
  }
  out.sweeps = accepted + (out.converged ? 1 : 0);
  out.surrogate = frobenius_surrogate(data, out.matching);
  out.objective = objective_from_surrogate(data, out.surrogate);
  out.seconds = watch.seconds();
  return out;
}

SolveResult exhaustive(const FeatureStack& data, const SolveOptions& opts, std::uint64_t max_leaves) {
  Stopwatch watch;
  const auto n = data.n();
  const auto m = static_cast<int>(data.m());

  std::vector<Permutation> all;
  Permutation perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    all.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::uint64_t leaves = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (leaves > max_leaves / all.size()) {
      throw InvalidInput("instance too large for exhaustive search: (m!)^(n-1) exceeds " +
                         std::to_string(max_leaves));
    }
    leaves *= all.size();
  }

  Matching current = Matching::identity(n, m);
  Matching best = current;
  double best_surrogate = -1.0;
  bool timed_out = false;
  std::uint64_t visited = 0;

  std::vector<Eigen::MatrixXd> partial(n);
  partial[0] = data.unit(0);
  // Depth-first over units 1..n-1; partial[i] holds sum_{j<=i} X_j P_j.
  auto descend = [&](auto&& self, std::size_t i) -> void {
    if (timed_out) return;
    if (i == n) {
      const double value = partial[n - 1].squaredNorm();
      if (value > best_surrogate) {
        best_surrogate = value;
        best = current;
      }
      if ((++visited & 0xFFF) == 0 && past_deadline(opts)) timed_out = true;
      return;
    }
    for (const auto& candidate : all) {
      current.perms[i] = candidate;
      partial[i] = partial[i - 1] + permute_columns(data.unit(i), candidate);
      self(self, i + 1);
    }
  };
  if (n == 1) {
    best_surrogate = data.unit(0).squaredNorm();
  } else {
    descend(descend, 1);
  }

  SolveResult out;
  out.matching = std::move(best);
  out.surrogate = frobenius_surrogate(data, out.matching);
  out.objective = objective_from_surrogate(data, out.surrogate);
  out.sweeps = 1;
  out.converged = !timed_out;
  out.timed_out = timed_out;
  out.history = {out.surrogate};
  out.seconds = watch.seconds();
  return out;
}

}  // namespace featmatch
