#ifndef FEATMATCH_SEARCH_HPP_
#define FEATMATCH_SEARCH_HPP_

#include "featmatch/core.hpp"

#include <chrono>
#include <cstdint>
#include <optional>

namespace featmatch {

enum class SweepOrder { cyclic, random_permutation };

using Clock = std::chrono::steady_clock;

struct SolveOptions {
  int max_sweeps = 1000;
  SweepOrder order = SweepOrder::cyclic;
  std::uint64_t seed = 0;
  // A sweep counts as an improvement only if it beats the previous value by
  // more than rel_tol * |previous|. Zero means plain strict comparison.
  double rel_tol = 0.0;
  // UBQP subsolver used by interchange.
  int ubqp_exact_limit = 20;
  int ubqp_restarts = 32;
  // Interchange picks the candidate assignment at random instead of first in
  // insertion order.
  bool random_candidate = false;
  // Solvers stop at the first sweep boundary past the deadline and return the
  // best point so far with timed_out set.
  std::optional<Clock::time_point> deadline;
};

// K-means matching: alternate one LAP per unit against the current cluster
// centers with recomputation of the centers, until the objective stops
// strictly decreasing. For p = 1 the assignment step is a rank matching.
SolveResult kmeans_match(const FeatureStack& data, const Matching& start, const SolveOptions& opts = {});

// One assignment step for scalar features: each unit's values are matched by
// rank to the centers of `current`. Requires p = 1.
Matching sort_match_1d(const FeatureStack& data, const Matching& current);

// Block coordinate ascent on ||sum_i X_i P_i||_F^2, one unit at a time with
// the running sum kept up to date.
SolveResult bca(const FeatureStack& data, const Matching& start, const SolveOptions& opts = {});

// Frank-Wolfe on the doubly stochastic relaxation. Every direction is a
// permutation and the line search picks step 0 or 1, so iterates stay
// integral.
SolveResult frank_wolfe(const FeatureStack& data, const Matching& start, const SolveOptions& opts = {});

// Pairwise interchange with greedy selection; each pair of assignments is
// optimized exactly (up to the UBQP subsolver) over all element swaps.
// `sweeps` counts passes over the candidate set, i.e. accepted interchanges
// plus the final pass.
SolveResult interchange(const FeatureStack& data, const Matching& start, const SolveOptions& opts = {});

// Global optimum by enumeration with the first permutation fixed to the
// identity. Throws InvalidInput when (m!)^(n-1) exceeds `max_leaves`.
SolveResult exhaustive(const FeatureStack& data, const SolveOptions& opts = {},
                       std::uint64_t max_leaves = 1'000'000);

// Maximize c'Gc - b'c over c in {0,1}^n.
struct UbqpInstance {
  Eigen::MatrixXd gram;     // symmetric n x n
  Eigen::VectorXd linear;   // b
};

struct UbqpSolution {
  std::vector<int> c;
  double value = 0.0;
  bool exact = false;
};

double ubqp_value(const UbqpInstance& inst, const std::vector<int>& c);

// Exhaustive Gray-code enumeration when n <= exact_limit, otherwise 1-flip
// hill climbing from c = 0 and restarts - 1 seeded random points.
UbqpSolution solve_ubqp(const UbqpInstance& inst, int exact_limit = 20, std::uint64_t seed = 0,
                        int restarts = 32);

// Block coordinate descent for the unbalanced problem. Per unit, an m_i x K
// cost matrix against the clusters with that unit removed is solved as a
// rectangular assignment (transposed when m_i > K).
PartialSolveResult bca_unbalanced(const UnbalancedStack& data, const PartialMatching& start,
                                  const SolveOptions& opts = {});

}  // namespace featmatch

#endif  // FEATMATCH_SEARCH_HPP_
