#include "featmatch/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace featmatch {

namespace {

void require_finite(const Eigen::MatrixXd& x, std::size_t unit) {
  if (!x.allFinite()) {
    throw InvalidInput("unit " + std::to_string(unit + 1) + " contains NaN or Inf");
  }
}

}  // namespace

FeatureStack::FeatureStack(std::vector<Eigen::MatrixXd> units) : units_(std::move(units)) {
  if (units_.empty()) throw InvalidInput("feature stack needs at least one unit");
  const Eigen::Index p = units_.front().rows();
  const Eigen::Index m = units_.front().cols();
  if (p < 1 || m < 1) throw InvalidInput("feature stack needs p >= 1 and m >= 1");
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].rows() != p || units_[i].cols() != m) {
      throw InvalidInput("unit " + std::to_string(i + 1) + " has shape " +
                         std::to_string(units_[i].rows()) + "x" + std::to_string(units_[i].cols()) +
                         ", expected " + std::to_string(p) + "x" + std::to_string(m));
    }
    require_finite(units_[i], i);
    total_sq_norm_ += units_[i].squaredNorm();
  }
}

UnbalancedStack::UnbalancedStack(std::vector<Eigen::MatrixXd> units, int clusters)
    : units_(std::move(units)), clusters_(clusters) {
  if (units_.empty()) throw InvalidInput("unbalanced stack needs at least one unit");
  if (clusters_ < 1) throw InvalidInput("cluster count K must be >= 1");
  const Eigen::Index p = units_.front().rows();
  if (p < 1) throw InvalidInput("feature dimension must be >= 1");
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].rows() != p) {
      throw InvalidInput("unit " + std::to_string(i + 1) + " has feature dimension " +
                         std::to_string(units_[i].rows()) + ", expected " + std::to_string(p));
    }
    if (units_[i].cols() < 1) {
      throw InvalidInput("unit " + std::to_string(i + 1) + " has no vectors");
    }
    require_finite(units_[i], i);
  }
}

Matching Matching::identity(std::size_t n, int m) {
  Permutation id(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) id[static_cast<std::size_t>(k)] = k;
  return Matching{std::vector<Permutation>(n, id)};
}

bool is_permutation(const Permutation& perm, int m) {
  if (perm.size() != static_cast<std::size_t>(m)) return false;
  std::vector<char> seen(perm.size(), 0);
  for (int v : perm) {
    if (v < 0 || v >= m || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

void validate(const FeatureStack& data, const Matching& matching) {
  if (matching.n() != data.n()) {
    throw InvalidInput("matching has " + std::to_string(matching.n()) + " permutations for " +
                       std::to_string(data.n()) + " units");
  }
  const int m = static_cast<int>(data.m());
  for (std::size_t i = 0; i < matching.n(); ++i) {
    if (!is_permutation(matching.perms[i], m)) {
      throw InvalidInput("permutation of unit " + std::to_string(i + 1) +
                         " is not a bijection of 1.." + std::to_string(m));
    }
  }
}

void validate(const UnbalancedStack& data, const PartialMatching& matching) {
  if (matching.labels.size() != data.n()) {
    throw InvalidInput("partial matching has " + std::to_string(matching.labels.size()) +
                       " label maps for " + std::to_string(data.n()) + " units");
  }
  const int K = data.clusters();
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto& s = matching.labels[i];
    const auto mi = static_cast<std::size_t>(data.size(i));
    if (s.size() != mi) {
      throw InvalidInput("label map of unit " + std::to_string(i + 1) + " has wrong length");
    }
    std::vector<char> used(static_cast<std::size_t>(K) + 1, 0);
    std::size_t assigned = 0;
    for (int label : s) {
      if (label < 0 || label > K) {
        throw InvalidInput("unit " + std::to_string(i + 1) + " has cluster label out of range");
      }
      if (label == 0) continue;
      if (used[static_cast<std::size_t>(label)]) {
        throw InvalidInput("unit " + std::to_string(i + 1) + " assigns two vectors to cluster " +
                           std::to_string(label));
      }
      used[static_cast<std::size_t>(label)] = 1;
      ++assigned;
    }
    if (assigned != std::min(mi, static_cast<std::size_t>(K))) {
      throw InvalidInput("unit " + std::to_string(i + 1) + " must assign exactly min(m_i, K) vectors");
    }
  }
}

Eigen::MatrixXd permute_columns(const Eigen::MatrixXd& x, const Permutation& perm) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(perm.size()));
  for (std::size_t k = 0; k < perm.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = x.col(perm[k]);
  return out;
}

Eigen::MatrixXd running_sum(const FeatureStack& data, const Matching& matching) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(data.p(), data.m());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto& x = data.unit(i);
    const auto& perm = matching.perms[i];
    for (Eigen::Index k = 0; k < data.m(); ++k) s.col(k) += x.col(perm[static_cast<std::size_t>(k)]);
  }
  return s;
}

double frobenius_surrogate(const FeatureStack& data, const Matching& matching) {
  validate(data, matching);
  return running_sum(data, matching).squaredNorm();
}

double objective_from_surrogate(const FeatureStack& data, double surrogate) {
  const double value = static_cast<double>(data.n()) * data.total_sq_norm() - surrogate;
  return std::max(0.0, value);
}

double objective_pairwise(const FeatureStack& data, const Matching& matching) {
  return objective_from_surrogate(data, frobenius_surrogate(data, matching));
}

Eigen::MatrixXd cluster_centers(const FeatureStack& data, const Matching& matching) {
  validate(data, matching);
  return running_sum(data, matching) / static_cast<double>(data.n());
}

double objective_mean(const FeatureStack& data, const Matching& matching) {
  const Eigen::MatrixXd centers = cluster_centers(data, matching);
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    total += (permute_columns(data.unit(i), matching.perms[i]) - centers).squaredNorm();
  }
  return total;
}

IdentityResiduals check_identities(const FeatureStack& data, const Matching& matching) {
  IdentityResiduals r;
  const double n = static_cast<double>(data.n());
  const double surrogate = frobenius_surrogate(data, matching);
  r.pairwise = objective_pairwise(data, matching);
  r.mean_residual = std::abs(r.pairwise - n * objective_mean(data, matching));
  r.surrogate_residual = std::abs(r.pairwise - (n * data.total_sq_norm() - surrogate));
  return r;
}

double objective_unbalanced(const UnbalancedStack& data, const PartialMatching& matching) {
  validate(data, matching);
  const int K = data.clusters();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(data.p(), K);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(K);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto& x = data.unit(i);
    for (Eigen::Index q = 0; q < x.cols(); ++q) {
      const int label = matching.labels[i][static_cast<std::size_t>(q)];
      if (label == 0) continue;
      sums.col(label - 1) += x.col(q);
      sq(label - 1) += x.col(q).squaredNorm();
      count(label - 1) += 1.0;
    }
  }
  double total = 0.0;
  for (int k = 0; k < K; ++k) total += count(k) * sq(k) - sums.col(k).squaredNorm();
  return std::max(0.0, total);
}

UnbalancedStack to_unbalanced(const FeatureStack& data) {
  return UnbalancedStack(data.units(), static_cast<int>(data.m()));
}

PartialMatching to_partial(const Matching& matching) {
  PartialMatching out;
  out.labels.reserve(matching.n());
  for (const auto& perm : matching.perms) {
    std::vector<int> labels(perm.size(), 0);
    for (std::size_t k = 0; k < perm.size(); ++k) labels[static_cast<std::size_t>(perm[k])] = static_cast<int>(k) + 1;
    out.labels.push_back(std::move(labels));
  }
  return out;
}

std::vector<int> cluster_labels(const Matching& matching) {
  std::vector<int> labels;
  if (matching.perms.empty()) return labels;
  const std::size_t m = matching.perms.front().size();
  labels.resize(matching.n() * m);
  for (std::size_t i = 0; i < matching.n(); ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      labels[i * m + static_cast<std::size_t>(matching.perms[i][k])] = static_cast<int>(k);
    }
  }
  return labels;
}

Matching canonical(const Matching& matching) {
  if (matching.perms.empty()) return matching;
  const Permutation& first = matching.perms.front();
  Matching out = matching;
  for (std::size_t i = 0; i < matching.n(); ++i) {
    for (std::size_t k = 0; k < first.size(); ++k) {
      out.perms[i][static_cast<std::size_t>(first[k])] = matching.perms[i][k];
    }
  }
  return out;
}

}  // namespace featmatch
