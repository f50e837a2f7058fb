#include "featmatch/gmm.hpp"
#include "featmatch/harness.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace featmatch;

namespace {

Eigen::MatrixXd positive(std::mt19937_64& rng, Eigen::Index m) {
  std::uniform_real_distribution<double> dist(0.05, 2.0);
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) a(r, c) = dist(rng);
  return a;
}

double log_normal_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov) {
  const Eigen::Index p = x.size();
  const Eigen::VectorXd d = x - mu;
  return -0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant()) -
         0.5 * d.dot(cov.inverse() * d);
}

}  // namespace

TEST_CASE("permanent examples") {
  CHECK(permanent(Eigen::MatrixXd::Identity(4, 4)) == doctest::Approx(1.0));
  CHECK(permanent(Eigen::MatrixXd::Ones(3, 3)) == doctest::Approx(6.0));
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(permanent(a) == doctest::Approx(10.0));
  CHECK(permanent(Eigen::MatrixXd(0, 0)) == 1.0);
  CHECK_THROWS_AS(permanent(Eigen::MatrixXd::Ones(5, 5), 4), InvalidInput);
  CHECK_THROWS_AS(permanent(Eigen::MatrixXd::Ones(2, 3)), InvalidInput);
}

TEST_CASE("permanent matches Leibniz") {
  std::mt19937_64 rng(41);
  for (Eigen::Index m = 1; m <= 7; ++m) {
    for (int t = 0; t < 20; ++t) {
      const Eigen::MatrixXd a = positive(rng, m);
      CHECK(oracle::rel_gap(permanent(a), oracle::permanent_leibniz(a)) <= 1e-10);
    }
  }
}

TEST_CASE("sinkhorn balancing") {
  Eigen::MatrixXd ds(2, 2);
  ds << 0.25, 0.75, 0.75, 0.25;
  const SinkhornResult same = sinkhorn(ds);
  CHECK(same.scaled == ds);
  CHECK(same.log_factor == 0.0);

  const SinkhornResult diag = sinkhorn(2.0 * Eigen::MatrixXd::Identity(2, 2));
  CHECK(diag.scaled.isApprox(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(diag.log_factor == doctest::Approx(2.0 * std::log(2.0)));

  Eigen::MatrixXd neg = Eigen::MatrixXd::Ones(2, 2);
  neg(0, 1) = -1.0;
  CHECK_THROWS_AS(sinkhorn(neg), InvalidInput);
  Eigen::MatrixXd empty_row = Eigen::MatrixXd::Ones(2, 2);
  empty_row.row(1).setZero();
  CHECK_THROWS_AS(sinkhorn(empty_row), InvalidInput);

  std::mt19937_64 rng(42);
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd a = positive(rng, 5);
    const SinkhornResult s = sinkhorn(a);
    CHECK(s.converged);
    CHECK(oracle::doubly_stochastic(s.scaled, 1e-8));
    const double rebuilt = std::exp(std::log(permanent(s.scaled)) + s.log_factor);
    CHECK(oracle::rel_gap(rebuilt, permanent(a)) <= 1e-10);
  }
}

TEST_CASE("log densities use the Cholesky factor") {
  std::mt19937_64 rng(43);
  const MixtureParams params = oracle::random_params(rng, 3, 2);
  const Eigen::MatrixXd x = oracle::gaussian(rng, 2, 3);
  const Eigen::MatrixXd ld = log_densities(x, params, 0.0);
  for (Eigen::Index k = 0; k < 3; ++k)
    for (Eigen::Index l = 0; l < 3; ++l)
      CHECK(ld(k, l) == doctest::Approx(log_normal_pdf(x.col(k), params.means[l], params.covariances[l])).epsilon(1e-12));

  MixtureParams bad = params;
  bad.covariances[1] = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(log_densities(x, bad), InvalidInput);
  bad.means.pop_back();
  CHECK_THROWS_AS(log_densities(x, bad), InvalidInput);
}

TEST_CASE("e-step matches enumeration") {
  std::mt19937_64 rng(44);
  for (int m = 1; m <= 5; ++m) {
    for (int t = 0; t < 10; ++t) {
      const int p = 1 + static_cast<int>(rng() % 3);
      const FeatureStack data = oracle::random_stack(rng, 3, m, p, 2.0);
      const MixtureParams params = oracle::random_params(rng, m, p);
      const Posteriors post = e_step(data, params, 1.0, 0.0);
      for (std::size_t i = 0; i < data.n(); ++i) {
        const Eigen::MatrixXd ld = log_densities(data.unit(i), params, 0.0);
        const Eigen::MatrixXd a = ld.array().exp().matrix();
        CHECK((post.weights[i] - oracle::posterior_enumerate(a)).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(oracle::doubly_stochastic(post.weights[i], 1e-8));
        CHECK(post.log_normalizers[i] == doctest::Approx(std::log(oracle::permanent_leibniz(a))).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("e-step special cases") {
  std::mt19937_64 rng(45);
  const FeatureStack one = oracle::random_stack(rng, 4, 1, 2);
  const MixtureParams params = oracle::random_params(rng, 1, 2);
  const Posteriors post = e_step(one, params, 1.0, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < one.n(); ++i) {
    CHECK(post.weights[i](0, 0) == 1.0);
    const double lp = log_normal_pdf(one.unit(i).col(0), params.means[0], params.covariances[0]);
    CHECK(post.log_normalizers[i] == doctest::Approx(lp).epsilon(1e-12));
    total += lp;
  }
  CHECK(log_likelihood(post, 1) == doctest::Approx(total).epsilon(1e-12));

  // m = 2: symmetric means, equal isotropic covariances
  MixtureParams sym;
  sym.means = {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(-1.0, 0.0)};
  sym.covariances = {Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()};
  const FeatureStack two = oracle::random_stack(rng, 5, 2, 2);
  const Posteriors p2 = e_step(two, sym, 1.0, 0.0);
  double ll = 0.0;
  for (std::size_t i = 0; i < two.n(); ++i) {
    const Eigen::MatrixXd a = log_densities(two.unit(i), sym, 0.0).array().exp().matrix();
    CHECK((p2.weights[i] - oracle::posterior_enumerate(a)).cwiseAbs().maxCoeff() <= 1e-12);
    ll += std::log((a(0, 0) * a(1, 1) + a(0, 1) * a(1, 0)) / 2.0);
  }
  CHECK(log_likelihood(two, sym, 0.0) == doctest::Approx(ll).epsilon(1e-12));

  // far-away points: densities underflow in linear space, the log-space path stays finite
  const FeatureStack far({Eigen::MatrixXd::Constant(2, 3, 80.0), Eigen::MatrixXd::Constant(2, 3, -60.0)});
  const Posteriors pf = e_step(far, oracle::random_params(rng, 3, 2), 1.0);
  for (const auto& w : pf.weights) CHECK(oracle::doubly_stochastic(w, 1e-8));
  for (double v : pf.log_normalizers) CHECK(std::isfinite(v));

  CHECK_THROWS_AS(e_step(two, sym, 0.0), InvalidInput);
  CHECK_THROWS_AS(e_step(two, sym, 1.5), InvalidInput);
  CHECK_THROWS_AS(e_step(oracle::random_stack(rng, 2, 4, 2), oracle::random_params(rng, 4, 2), 1.0, 1e-6, 3),
                  InvalidInput);
}

TEST_CASE("tempered posteriors stay doubly stochastic") {
  std::mt19937_64 rng(46);
  const FeatureStack data = oracle::random_stack(rng, 4, 4, 2, 2.0);
  const MixtureParams params = oracle::random_params(rng, 4, 2);
  const Posteriors hot = e_step(data, params, 0.3);
  const Posteriors cold = e_step(data, params, 1.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    CHECK(oracle::doubly_stochastic(hot.weights[i], 1e-8));
    // flatter than the untempered posterior
    CHECK(hot.weights[i].maxCoeff() <= cold.weights[i].maxCoeff() + 1e-12);
  }
  AnnealSchedule schedule{0.2, 2.0};
  CHECK(schedule.beta(0) == doctest::Approx(0.2));
  CHECK(schedule.beta(1) == doctest::Approx(0.4));
  CHECK(schedule.beta(3) == 1.0);
}

TEST_CASE("m-step") {
  std::mt19937_64 rng(47);
  const FeatureStack data = oracle::random_stack(rng, 6, 3, 2);
  const Matching mt = oracle::random_matching(rng, 6, 3);
  const MixtureParams hard = params_from_matching(data, mt, false, 0.0);
  const Eigen::MatrixXd centers = cluster_centers(data, mt);
  for (int l = 0; l < 3; ++l) CHECK(hard.means[static_cast<std::size_t>(l)].isApprox(centers.col(l)));

  const FeatureStack single = oracle::random_stack(rng, 1, 3, 2);
  Posteriors eye;
  eye.weights = {Eigen::MatrixXd::Identity(3, 3)};
  const MixtureParams own = m_step(single, eye, false, 0.0);
  for (int l = 0; l < 3; ++l) CHECK(own.means[static_cast<std::size_t>(l)].isApprox(single.unit(0).col(l)));

  // soft weights against a direct weighted mean and covariance
  const Posteriors soft = e_step(data, oracle::random_params(rng, 3, 2), 1.0);
  const MixtureParams fit = m_step(data, soft, false, 0.0);
  for (Eigen::Index l = 0; l < 3; ++l) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
    for (std::size_t i = 0; i < data.n(); ++i)
      for (Eigen::Index k = 0; k < 3; ++k) mu += soft.weights[i](k, l) * data.unit(i).col(k);
    mu /= 6.0;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
    for (std::size_t i = 0; i < data.n(); ++i)
      for (Eigen::Index k = 0; k < 3; ++k) {
        const Eigen::VectorXd d = data.unit(i).col(k) - mu;
        cov += soft.weights[i](k, l) * d * d.transpose();
      }
    cov /= 6.0;
    CHECK(fit.means[static_cast<std::size_t>(l)].isApprox(mu, 1e-12));
    CHECK(fit.covariances[static_cast<std::size_t>(l)].isApprox(cov, 1e-12));
  }
  const MixtureParams shared = m_step(data, soft, true, 0.0);
  const Eigen::MatrixXd avg = (fit.covariances[0] + fit.covariances[1] + fit.covariances[2]) / 3.0;
  for (const auto& c : shared.covariances) CHECK(c.isApprox(avg, 1e-12));

  const MixtureParams ridged = m_step(data, soft, false, 1e-3);
  const Eigen::MatrixXd& c0 = fit.covariances[0];
  CHECK((ridged.covariances[0] - c0).isApprox(1e-3 * c0.diagonal().mean() * Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("harden") {
  Posteriors hard;
  hard.weights = {Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 3)};
  hard.weights[1](0, 2) = hard.weights[1](1, 0) = hard.weights[1](2, 1) = 1.0;
  const Matching mt = harden(hard);
  CHECK(mt.perms[0] == Permutation{0, 1, 2});
  // class l -> column: class 0 holds column 1, class 1 column 2, class 2 column 0
  CHECK(mt.perms[1] == Permutation{1, 2, 0});

  Posteriors flat;
  flat.weights = {Eigen::MatrixXd::Constant(4, 4, 0.25)};
  CHECK(harden(flat).perms[0] == Permutation{0, 1, 2, 3});

  std::mt19937_64 rng(48);
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 3);
    Posteriors post;
    post.weights = {sinkhorn(positive(rng, m), 1000, 1e-13).scaled};
    const Permutation got = harden(post).perms[0];
    double best = -std::numeric_limits<double>::infinity();
    Permutation perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double v = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) v += std::log(post.weights[0](perm[static_cast<std::size_t>(k)], k));
      best = std::max(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    double mine = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) mine += std::log(post.weights[0](got[static_cast<std::size_t>(k)], k));
    CHECK(mine == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("em fitting") {
  GenConfig config;
  config.n = 15;
  config.m = 4;
  config.p = 2;
  config.center_sd = 25.0;
  config.class_sd = {0.5};
  config.noise_sd = 0.5;
  config.seed = 3;
  const GeneratedData gen = generate(config);
  const Matching plant = plant_matching(gen.labels);
  const EmResult fit = em_fit(gen.data, params_from_matching(gen.data, plant));
  CHECK(fit.converged);
  CHECK(fit.log_likelihood.size() <= 4);  // at most three iterations
  CHECK(rand_index(cluster_labels(fit.solve.matching), flatten_labels(gen.labels)) == 1.0);
  CHECK(check_identities(gen.data, fit.solve.matching).within());

  std::mt19937_64 rng(49);
  for (int t = 0; t < 10; ++t) {
    const FeatureStack data = oracle::random_stack(rng, 6, 3, 2, 2.0);
    const Matching start = oracle::random_matching(rng, 6, 3);
    EmOptions plain;
    EmOptions annealed;
    annealed.anneal = AnnealSchedule{0.25, 1.5};
    for (const EmOptions& opts : {plain, annealed}) {
      const EmResult r = em_fit(data, start, opts);
      CHECK_NOTHROW(validate(data, r.solve.matching));
      // likelihood only has to climb once the temperature has reached 1
      std::size_t first = 0;
      while (first < r.log_likelihood.size() && opts.anneal.beta(static_cast<int>(first)) < 1.0) ++first;
      for (std::size_t h = first + 1; h < r.log_likelihood.size(); ++h)
        CHECK(r.log_likelihood[h] >= r.log_likelihood[h - 1] - 1e-8);
    }
  }

  const FeatureStack single_class = oracle::random_stack(rng, 5, 1, 2);
  const EmResult one = em_fit(single_class, Matching::identity(5, 1));
  CHECK(one.converged);
  CHECK(one.log_likelihood.size() == 2);
  CHECK(one.log_likelihood[1] == doctest::Approx(one.log_likelihood[0]).epsilon(1e-12));

  EmOptions late;
  late.deadline = Clock::now() - std::chrono::seconds(1);
  CHECK(em_fit(gen.data, plant, late).solve.timed_out);
}
