#ifndef FEATMATCH_CORE_HPP_
#define FEATMATCH_CORE_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace featmatch {

// Raised for malformed inputs: shape mismatches, non-finite values, invalid
// permutations. The CLI maps it to exit code 2.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// 0-based permutation of {0, ..., m-1}.
using Permutation = std::vector<int>;

// n units, each a p x m matrix whose columns are the feature vectors x_ik.
// Immutable once constructed; construction rejects empty or non-finite data.
class FeatureStack {
 public:
  explicit FeatureStack(std::vector<Eigen::MatrixXd> units);

  std::size_t n() const { return units_.size(); }
  Eigen::Index m() const { return units_.front().cols(); }
  Eigen::Index p() const { return units_.front().rows(); }

  const Eigen::MatrixXd& unit(std::size_t i) const { return units_[i]; }
  const std::vector<Eigen::MatrixXd>& units() const { return units_; }

  // Sum over units of the squared Frobenius norm.
  double total_sq_norm() const { return total_sq_norm_; }

 private:
  std::vector<Eigen::MatrixXd> units_;
  double total_sq_norm_ = 0.0;
};

// Units with possibly different column counts m_i, to be spread over K
// clusters with at most one vector per unit in each cluster.
class UnbalancedStack {
 public:
  UnbalancedStack(std::vector<Eigen::MatrixXd> units, int clusters);

  std::size_t n() const { return units_.size(); }
  Eigen::Index p() const { return units_.front().rows(); }
  int clusters() const { return clusters_; }
  Eigen::Index size(std::size_t i) const { return units_[i].cols(); }

  const Eigen::MatrixXd& unit(std::size_t i) const { return units_[i]; }
  const std::vector<Eigen::MatrixXd>& units() const { return units_; }

 private:
  std::vector<Eigen::MatrixXd> units_;
  int clusters_ = 0;
};

// One permutation per unit. perms[i][k] is the column of unit i placed in
// cluster k, so cluster k = { x_{i, perms[i][k]} : i }.
struct Matching {
  std::vector<Permutation> perms;

  std::size_t n() const { return perms.size(); }
  static Matching identity(std::size_t n, int m);

  friend bool operator==(const Matching&, const Matching&) = default;
};

// labels[i][q] is the cluster (1..K) of column q of unit i, 0 if unmatched.
struct PartialMatching {
  std::vector<std::vector<int>> labels;

  friend bool operator==(const PartialMatching&, const PartialMatching&) = default;
};

struct SolveResult {
  Matching matching;
  double objective = 0.0;  // pairwise sum of squared distances
  double surrogate = 0.0;  // || sum_i X_i P_i ||_F^2
  int sweeps = 0;
  bool converged = false;
  bool timed_out = false;
  double seconds = 0.0;
  // Per-sweep value of the criterion the solver monitors, starting with the
  // value at the start point: the surrogate for ascent methods (bca,
  // frank_wolfe), the pairwise objective for descent methods.
  std::vector<double> history;
};

struct PartialSolveResult {
  PartialMatching matching;
  double objective = 0.0;
  int sweeps = 0;
  bool converged = false;
  bool timed_out = false;
  double seconds = 0.0;
  std::vector<double> history;
};

struct IdentityResiduals {
  double mean_residual = 0.0;       // |pairwise - n * mean|
  double surrogate_residual = 0.0;  // |pairwise - (n sum ||X_i||^2 - surrogate)|
  double pairwise = 0.0;

  bool within(double rel_tol = 1e-9) const {
    const double bound = rel_tol * (1.0 + pairwise);
    return mean_residual <= bound && surrogate_residual <= bound;
  }
};

bool is_permutation(const Permutation& perm, int m);

// Throws InvalidInput unless `matching` has one valid permutation of size m
// per unit of `data`.
void validate(const FeatureStack& data, const Matching& matching);
void validate(const UnbalancedStack& data, const PartialMatching& matching);

// Columns of x reordered so that column k is x.col(perm[k]).
Eigen::MatrixXd permute_columns(const Eigen::MatrixXd& x, const Permutation& perm);

// S = sum_i X_i P_i, the unnormalized cluster sums.
Eigen::MatrixXd running_sum(const FeatureStack& data, const Matching& matching);

double objective_pairwise(const FeatureStack& data, const Matching& matching);
double objective_mean(const FeatureStack& data, const Matching& matching);
double frobenius_surrogate(const FeatureStack& data, const Matching& matching);
Eigen::MatrixXd cluster_centers(const FeatureStack& data, const Matching& matching);
IdentityResiduals check_identities(const FeatureStack& data, const Matching& matching);

// Pairwise objective from a surrogate value: n * sum ||X_i||^2 - surrogate,
// clamped at zero against rounding.
double objective_from_surrogate(const FeatureStack& data, double surrogate);

// Within-cluster pairwise objective for a partial assignment.
double objective_unbalanced(const UnbalancedStack& data, const PartialMatching& matching);

// Conversions between the balanced and partial representations.
UnbalancedStack to_unbalanced(const FeatureStack& data);
PartialMatching to_partial(const Matching& matching);

// Flat cluster labels, unit-major: item i*m + l gets the cluster holding
// column l of unit i.
std::vector<int> cluster_labels(const Matching& matching);

// Same partition with clusters renumbered so unit 0 is the identity.
Matching canonical(const Matching& matching);

}  // namespace featmatch

#endif  // FEATMATCH_CORE_HPP_
