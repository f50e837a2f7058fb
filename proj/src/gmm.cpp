#include "featmatch/gmm.hpp"

#include "featmatch/lap.hpp"
#include "solver_util.hpp"

#include <cmath>
#include <numbers>

namespace featmatch {

namespace {

constexpr double kLogFloor = -700.0;

struct Factor {
  Eigen::MatrixXd lower;
  double log_det_half = 0.0;  // sum log diag(L) = log |Sigma|^{1/2}
};

Factor factorize(const Eigen::MatrixXd& cov, double ridge) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) llt.compute(add_ridge(cov, 10.0 * ridge));
  if (llt.info() != Eigen::Success) throw InvalidInput("covariance is not positive definite even after ridge");
  Factor f;
  f.lower = llt.matrixL();
  f.log_det_half = f.lower.diagonal().array().log().sum();
  return f;
}

double log_sum_exp(const Eigen::ArrayXXd& values) {
  const double top = values.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((values - top).exp().sum());
}

Eigen::MatrixXd drop_row_col(const Eigen::MatrixXd& a, Eigen::Index row, Eigen::Index col) {
  const Eigen::Index m = a.rows();
  Eigen::MatrixXd out(m - 1, m - 1);
  for (Eigen::Index r = 0, rr = 0; r < m; ++r) {
    if (r == row) continue;
    for (Eigen::Index c = 0, cc = 0; c < m; ++c) {
      if (c == col) continue;
      out(rr, cc++) = a(r, c);
    }
    ++rr;
  }
  return out;
}

void check_params(const MixtureParams& params, Eigen::Index p, Eigen::Index m) {
  if (params.means.size() != static_cast<std::size_t>(m) || params.covariances.size() != static_cast<std::size_t>(m)) {
    throw InvalidInput("mixture needs one mean and covariance per class (m = " + std::to_string(m) + ")");
  }
  for (std::size_t l = 0; l < params.means.size(); ++l) {
    if (params.means[l].size() != p || params.covariances[l].rows() != p || params.covariances[l].cols() != p) {
      throw InvalidInput("mixture class " + std::to_string(l + 1) + " has wrong dimensions");
    }
  }
}

// Posterior matrix and log per(A) from the log-density matrix of one unit.
void unit_posterior(const Eigen::MatrixXd& log_a, double beta, int max_order, Eigen::MatrixXd& weights,
                    double& log_norm) {
  const Eigen::Index m = log_a.rows();
  if (m > max_order) {
    throw InvalidInput("m = " + std::to_string(m) + " exceeds the permanent cap of " + std::to_string(max_order));
  }
  if (m == 1) {
    weights = Eigen::MatrixXd::Ones(1, 1);
    log_norm = log_a(0, 0);
    return;
  }
  // Row then column max shifts; both cancel in the posterior ratios and are
  // restored in the normalizer.
  Eigen::MatrixXd shifted = log_a;
  const Eigen::VectorXd row_max = shifted.rowwise().maxCoeff();
  shifted.colwise() -= row_max;
  const Eigen::RowVectorXd col_max = shifted.colwise().maxCoeff();
  shifted.rowwise() -= col_max;
  const double offset = row_max.sum() + col_max.sum();
  const Eigen::MatrixXd a = shifted.cwiseMax(kLogFloor).array().exp().matrix();

  const SinkhornResult balanced = sinkhorn(a);
  const Eigen::MatrixXd& b = balanced.scaled;
  Eigen::ArrayXXd log_p(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index l = 0; l < m; ++l) {
      const SinkhornResult minor = sinkhorn(drop_row_col(b, k, l));
      const double per_minor = permanent(minor.scaled, max_order);
      log_p(k, l) = std::log(b(k, l)) + std::log(per_minor) + minor.log_factor;
    }
  }
  // Every row (and column) of p sums to per(B).
  const double log_per_b = log_sum_exp(log_p) - std::log(static_cast<double>(m));
  weights = (log_p - log_per_b).exp().matrix();
  log_norm = log_per_b + balanced.log_factor + offset;

  if (beta < 1.0) {
    const Eigen::MatrixXd tempered = (beta * weights.array().log().max(kLogFloor)).exp().matrix();
    weights = sinkhorn(tempered, 1000, 1e-13).scaled;
  }
}

}  // namespace

double AnnealSchedule::beta(int iteration) const {
  return std::min(1.0, beta0 * std::pow(growth, iteration));
}

Eigen::MatrixXd add_ridge(const Eigen::MatrixXd& cov, double ridge) {
  const double mean_diag = cov.diagonal().mean();
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
  Eigen::MatrixXd out = cov;
  out.diagonal().array() += ridge * scale;
  return out;
}

Eigen::MatrixXd log_densities(const Eigen::MatrixXd& x, const MixtureParams& params, double ridge) {
  const Eigen::Index m = params.classes();
  const Eigen::Index p = x.rows();
  check_params(params, p, m);
  const double log_norm_const = -0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi);
  Eigen::MatrixXd out(x.cols(), m);
  for (Eigen::Index l = 0; l < m; ++l) {
    const Factor f = factorize(params.covariances[static_cast<std::size_t>(l)], ridge);
    const Eigen::MatrixXd centered = x.colwise() - params.means[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd whitened = f.lower.triangularView<Eigen::Lower>().solve(centered);
    out.col(l) = (log_norm_const - f.log_det_half - 0.5 * whitened.colwise().squaredNorm().array()).matrix().transpose();
  }
  return out;
}

Posteriors e_step(const FeatureStack& data, const MixtureParams& params, double beta, double ridge, int max_order) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput("annealing power beta must lie in (0, 1]");
  check_params(params, data.p(), data.m());
  Posteriors out;
  out.weights.resize(data.n());
  out.log_normalizers.resize(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    unit_posterior(log_densities(data.unit(i), params, ridge), beta, max_order, out.weights[i],
                   out.log_normalizers[i]);
  }
  return out;
}

MixtureParams m_step(const FeatureStack& data, const Posteriors& posteriors, bool shared_cov, double ridge) {
  if (posteriors.weights.size() != data.n()) throw InvalidInput("posteriors do not match the number of units");
  const Eigen::Index m = data.m();
  const Eigen::Index p = data.p();
  const double n = static_cast<double>(data.n());

  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(p, m);
  for (std::size_t i = 0; i < data.n(); ++i) means += data.unit(i) * posteriors.weights[i];
  means /= n;

  MixtureParams out;
  out.shared_cov = shared_cov;
  for (Eigen::Index l = 0; l < m; ++l) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = 0; i < data.n(); ++i) {
      const Eigen::MatrixXd centered = data.unit(i).colwise() - means.col(l);
      cov += centered * posteriors.weights[i].col(l).asDiagonal() * centered.transpose();
    }
    out.means.emplace_back(means.col(l));
    out.covariances.push_back(cov / n);
  }
  if (shared_cov) {
    Eigen::MatrixXd common = Eigen::MatrixXd::Zero(p, p);
    for (const auto& c : out.covariances) common += c;
    common /= static_cast<double>(m);
    for (auto& c : out.covariances) c = common;
  }
  for (auto& c : out.covariances) c = add_ridge(c, ridge);
  return out;
}

double log_likelihood(const Posteriors& posteriors, int classes) {
  double total = 0.0;
  for (double v : posteriors.log_normalizers) total += v;
  return total - static_cast<double>(posteriors.log_normalizers.size()) * std::lgamma(classes + 1.0);
}

double log_likelihood(const FeatureStack& data, const MixtureParams& params, double ridge, int max_order) {
  return log_likelihood(e_step(data, params, 1.0, ridge, max_order), static_cast<int>(data.m()));
}

MixtureParams params_from_matching(const FeatureStack& data, const Matching& matching, bool shared_cov,
                                   double ridge) {
  validate(data, matching);
  Posteriors hard;
  for (const auto& perm : matching.perms) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(data.m(), data.m());
    for (std::size_t l = 0; l < perm.size(); ++l) w(perm[l], static_cast<Eigen::Index>(l)) = 1.0;
    hard.weights.push_back(std::move(w));
  }
  return m_step(data, hard, shared_cov, ridge);
}

Matching harden(const Posteriors& posteriors) {
  Matching out;
  out.perms.reserve(posteriors.weights.size());
  for (const auto& w : posteriors.weights) {
    const Eigen::MatrixXd log_w = w.array().log().max(kLogFloor).matrix();
    out.perms.push_back(lap_max(log_w.transpose()).assign);  // class l -> column k
  }
  return out;
}

EmResult em_fit(const FeatureStack& data, const MixtureParams& start, const EmOptions& opts) {
  detail::Stopwatch watch;
  const int m = static_cast<int>(data.m());
  EmResult out;
  out.params = start;
  out.params.shared_cov = opts.shared_cov;
  double beta = opts.anneal.beta(0);
  out.posteriors = e_step(data, out.params, beta, opts.ridge, opts.max_order);
  out.log_likelihood.push_back(log_likelihood(out.posteriors, m));

  int iter = 0;
  bool timed_out = false;
  while (iter < opts.max_iters) {
    if (opts.deadline && Clock::now() >= *opts.deadline) {
      timed_out = true;
      break;
    }
    ++iter;
    const double prev_beta = beta;
    beta = opts.anneal.beta(iter);
    out.params = m_step(data, out.posteriors, opts.shared_cov, opts.ridge);
    out.posteriors = e_step(data, out.params, beta, opts.ridge, opts.max_order);
    const double prev = out.log_likelihood.back();
    const double next = log_likelihood(out.posteriors, m);
    out.log_likelihood.push_back(next);
    if (prev_beta >= 1.0 && beta >= 1.0 && next - prev < opts.tol * std::abs(prev)) {
      out.converged = true;
      break;
    }
  }

  out.solve.matching = harden(out.posteriors);
  out.solve.surrogate = frobenius_surrogate(data, out.solve.matching);
  out.solve.objective = objective_from_surrogate(data, out.solve.surrogate);
  out.solve.sweeps = iter;
  out.solve.converged = out.converged;
  out.solve.timed_out = timed_out;
  out.solve.history = out.log_likelihood;
  out.solve.seconds = watch.seconds();
  return out;
}

EmResult em_fit(const FeatureStack& data, const Matching& start, const EmOptions& opts) {
  return em_fit(data, params_from_matching(data, start, opts.shared_cov, opts.ridge), opts);
}

}  // namespace featmatch
