#ifndef FEATMATCH_SOLVER_UTIL_HPP_
#define FEATMATCH_SOLVER_UTIL_HPP_

#include "featmatch/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace featmatch::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(Clock::now()) {}
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  Clock::time_point start_;
};

inline bool past_deadline(const SolveOptions& opts) {
  return opts.deadline && Clock::now() >= *opts.deadline;
}

inline bool increased(double next, double prev, double rel_tol) {
  return next > prev + rel_tol * std::abs(prev);
}

inline bool decreased(double next, double prev, double rel_tol) {
  return next < prev - rel_tol * std::abs(prev);
}

// Unit visiting order for one sweep.
class SweepSchedule {
 public:
  SweepSchedule(std::size_t n, const SolveOptions& opts) : order_(n), rng_(opts.seed), kind_(opts.order) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  const std::vector<std::size_t>& next() {
    if (kind_ == SweepOrder::random_permutation) std::shuffle(order_.begin(), order_.end(), rng_);
    return order_;
  }

 private:
  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  SweepOrder kind_;
};

}  // namespace featmatch::detail

#endif  // FEATMATCH_SOLVER_UTIL_HPP_
