// Slow reference implementations and fixtures shared by the tests.
#ifndef FEATMATCH_TESTS_ORACLES_HPP_
#define FEATMATCH_TESTS_ORACLES_HPP_

#include "featmatch/core.hpp"
#include "featmatch/gmm.hpp"
#include "featmatch/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using featmatch::FeatureStack;
using featmatch::Matching;
using featmatch::Permutation;

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = dist(rng);
  return out;
}

inline FeatureStack random_stack(std::mt19937_64& rng, std::size_t n, int m, int p, double sd = 1.0) {
  std::vector<Eigen::MatrixXd> units;
  for (std::size_t i = 0; i < n; ++i) units.push_back(gaussian(rng, p, m, sd));
  return FeatureStack(std::move(units));
}

inline Permutation random_perm(std::mt19937_64& rng, int m) {
  Permutation perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

inline Matching random_matching(std::mt19937_64& rng, std::size_t n, int m) {
  Matching out;
  for (std::size_t i = 0; i < n; ++i) out.perms.push_back(random_perm(rng, m));
  return out;
}

// Direct double loop over unit pairs and clusters.
inline double pairwise_brute(const FeatureStack& data, const Matching& matching) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t j = i + 1; j < data.n(); ++j)
      for (std::size_t k = 0; k < matching.perms[i].size(); ++k)
        total += (data.unit(i).col(matching.perms[i][k]) - data.unit(j).col(matching.perms[j][k])).squaredNorm();
  return total;
}

// Minimum of sum_r a(r, perm[r]) over all permutations.
inline double lap_enumerate_min(const Eigen::MatrixXd& a) {
  Permutation perm(static_cast<std::size_t>(a.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (std::size_t r = 0; r < perm.size(); ++r) v += a(static_cast<Eigen::Index>(r), perm[r]);
    best = std::min(best, v);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double permanent_leibniz(const Eigen::MatrixXd& a) {
  Permutation perm(static_cast<std::size_t>(a.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    double prod = 1.0;
    for (std::size_t r = 0; r < perm.size(); ++r) prod *= a(static_cast<Eigen::Index>(r), perm[r]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

// Full enumeration of (m!)^n matchings, no symmetry reduction.
inline double exhaustive_min(const FeatureStack& data) {
  const std::size_t n = data.n();
  const int m = static_cast<int>(data.m());
  std::vector<Permutation> all;
  Permutation perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  do all.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::size_t> idx(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    Matching mt;
    for (std::size_t i = 0; i < n; ++i) mt.perms.push_back(all[idx[i]]);
    best = std::min(best, pairwise_brute(data, mt));
    std::size_t i = 0;
    while (i < n && ++idx[i] == all.size()) idx[i++] = 0;
    if (i == n) break;
  }
  return best;
}

// Posterior W(k, l) = sum over sigma with sigma(k) = l of prod_r A(r, sigma(r)), / per(A).
inline Eigen::MatrixXd posterior_enumerate(const Eigen::MatrixXd& a) {
  const Eigen::Index m = a.rows();
  Permutation perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  double total = 0.0;
  do {
    double prod = 1.0;
    for (Eigen::Index r = 0; r < m; ++r) prod *= a(r, perm[static_cast<std::size_t>(r)]);
    total += prod;
    for (Eigen::Index r = 0; r < m; ++r) w(r, perm[static_cast<std::size_t>(r)]) += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return w / total;
}

inline double ubqp_brute(const featmatch::UbqpInstance& inst) {
  const auto n = static_cast<std::size_t>(inst.linear.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    std::vector<int> c(n);
    for (std::size_t b = 0; b < n; ++b) c[b] = static_cast<int>((mask >> b) & 1U);
    best = std::max(best, featmatch::ubqp_value(inst, c));
  }
  return best;
}

inline double rel_gap(double value, double reference) {
  return std::abs(value - reference) / std::max(1.0, std::abs(reference));
}

inline bool doubly_stochastic(const Eigen::MatrixXd& w, double tol) {
  return (w.rowwise().sum().array() - 1.0).abs().maxCoeff() <= tol &&
         (w.colwise().sum().array() - 1.0).abs().maxCoeff() <= tol && w.minCoeff() >= -tol;
}

// Mixture with random means and random SPD covariances.
inline featmatch::MixtureParams random_params(std::mt19937_64& rng, int m, int p, double spread = 2.0) {
  featmatch::MixtureParams params;
  for (int l = 0; l < m; ++l) {
    params.means.emplace_back(gaussian(rng, p, 1, spread).col(0));
    const Eigen::MatrixXd b = gaussian(rng, p, p, 0.5);
    params.covariances.push_back(b * b.transpose() + Eigen::MatrixXd::Identity(p, p));
  }
  return params;
}

}  // namespace oracle

#endif  // FEATMATCH_TESTS_ORACLES_HPP_
