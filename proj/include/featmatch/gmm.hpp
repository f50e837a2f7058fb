#ifndef FEATMATCH_GMM_HPP_
#define FEATMATCH_GMM_HPP_

#include "featmatch/core.hpp"
#include "featmatch/search.hpp"

#include <vector>

namespace featmatch {

// Largest matrix order accepted by permanent() and the E step.
inline constexpr int kMaxPermanentOrder = 20;

// Ryser's inclusion-exclusion formula with Gray-code subset updates,
// O(2^m m). per of the 0 x 0 matrix is 1.
double permanent(const Eigen::MatrixXd& a, int max_order = kMaxPermanentOrder);

struct SinkhornResult {
  Eigen::MatrixXd scaled;
  // log per(A) = log per(scaled) + log_factor
  double log_factor = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Alternate row and column normalization of a nonnegative square
// matrix until every row and column sum is within tol of 1.
SinkhornResult sinkhorn(const Eigen::MatrixXd& a, int max_iters = 100, double tol = 1e-8);

// Parameters of the permuted Gaussian mixture: one mean and covariance per
// class l.
struct MixtureParams {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  bool shared_cov = false;

  int classes() const { return static_cast<int>(means.size()); }
};

// weights[i](k, l) = P(column k of unit i comes from class l | X_i).
struct Posteriors {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<double> log_normalizers;  // log per(A_i), A_i(k, l) = phi(x_ik; mu_l, Sigma_l)
};

struct AnnealSchedule {
  double beta0 = 1.0;
  double growth = 1.5;

  double beta(int iteration) const;
};

struct EmOptions {
  int max_iters = 200;
  double tol = 1e-6;             // relative log-likelihood increase
  AnnealSchedule anneal;         // beta0 = 1 is plain EM
  bool shared_cov = false;
  double ridge = 1e-6;           // relative to the mean covariance diagonal
  int max_order = kMaxPermanentOrder;
  std::optional<Clock::time_point> deadline;
};

struct EmResult {
  MixtureParams params;
  Posteriors posteriors;
  SolveResult solve;                   // hardened matching and its objective
  std::vector<double> log_likelihood;  // one entry per E step, before tempering
  bool converged = false;
};

// Adds ridge * mean(diag) * I to a covariance.
Eigen::MatrixXd add_ridge(const Eigen::MatrixXd& cov, double ridge);

// Log-density log phi(x; mu, Sigma) for every column of x against every class:
// entry (k, l). Covariances are factored once; a failed Cholesky is retried
// with ten times the ridge and then reported as InvalidInput.
Eigen::MatrixXd log_densities(const Eigen::MatrixXd& x, const MixtureParams& params, double ridge = 1e-6);

// Exact posteriors via permanents of the density matrices. For beta < 1 the
// tempered weights W^beta are rebalanced to a doubly stochastic matrix.
Posteriors e_step(const FeatureStack& data, const MixtureParams& params, double beta = 1.0,
                  double ridge = 1e-6, int max_order = kMaxPermanentOrder);

MixtureParams m_step(const FeatureStack& data, const Posteriors& posteriors, bool shared_cov = false,
                     double ridge = 1e-6);

// sum_i log per(A_i) - n log(m!)
double log_likelihood(const FeatureStack& data, const MixtureParams& params, double ridge = 1e-6,
                      int max_order = kMaxPermanentOrder);
double log_likelihood(const Posteriors& posteriors, int classes);

// Means are the cluster centers of the matching, covariances the
// within-cluster covariances plus the ridge.
MixtureParams params_from_matching(const FeatureStack& data, const Matching& matching, bool shared_cov = false,
                                   double ridge = 1e-6);

EmResult em_fit(const FeatureStack& data, const MixtureParams& start, const EmOptions& opts = {});
EmResult em_fit(const FeatureStack& data, const Matching& start, const EmOptions& opts = {});

// Modal permutation per unit: LAP on log W with entries floored at -700.
Matching harden(const Posteriors& posteriors);

}  // namespace featmatch

#endif  // FEATMATCH_GMM_HPP_
