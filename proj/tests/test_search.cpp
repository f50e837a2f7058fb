#include "featmatch/harness.hpp"
#include "featmatch/lap.hpp"
#include "featmatch/search.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace featmatch;

namespace {

using Solver = SolveResult (*)(const FeatureStack&, const Matching&, const SolveOptions&);

struct Named {
  const char* name;
  Solver fn;
  bool ascending;  // history holds the surrogate rather than the objective
};

const Named kSolvers[] = {
    {"kmeans", kmeans_match, false},
    {"bca", bca, true},
    {"fw", frank_wolfe, true},
    {"interchange", interchange, false},
};

GeneratedData planted(std::size_t n, int m, int p, std::uint64_t seed) {
  GenConfig config;
  config.n = n;
  config.m = m;
  config.p = p;
  config.center_sd = 30.0;
  config.class_sd = {0.3};
  config.noise_sd = 0.3;
  config.seed = seed;
  return generate(config);
}

void check_result(const FeatureStack& data, const SolveResult& r) {
  CHECK_NOTHROW(validate(data, r.matching));
  CHECK(r.objective >= 0.0);
  CHECK(r.surrogate >= 0.0);
  CHECK(oracle::rel_gap(r.objective, oracle::pairwise_brute(data, r.matching)) <= 1e-9);
  CHECK(check_identities(data, r.matching).within());
}

}  // namespace

TEST_CASE("solvers on identical units stop after one sweep") {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXd x = oracle::gaussian(rng, 3, 4);
  const FeatureStack same({x, x, x});
  for (const auto& s : kSolvers) {
    const std::string name = s.name;
    CAPTURE(name);
    const SolveResult r = s.fn(same, Matching::identity(3, 4), {});
    CHECK(r.matching == Matching::identity(3, 4));
    CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.converged);
    CHECK(r.sweeps == 1);
  }
}

TEST_CASE("single unit returns the start") {
  std::mt19937_64 rng(32);
  const FeatureStack one = oracle::random_stack(rng, 1, 4, 2);
  const Matching start{{{2, 0, 3, 1}}};
  for (const auto& s : kSolvers) {
    const std::string name = s.name;
    CAPTURE(name);
    const SolveResult r = s.fn(one, start, {});
    CHECK(r.matching == start);
    CHECK(r.objective == 0.0);
    CHECK(r.converged);
  }
}

TEST_CASE("solvers reject invalid starts") {
  std::mt19937_64 rng(33);
  const FeatureStack data = oracle::random_stack(rng, 3, 3, 2);
  for (const auto& s : kSolvers) {
    const std::string name = s.name;
    CAPTURE(name);
    CHECK_THROWS_AS(s.fn(data, Matching{{{0, 1, 2}, {0, 0, 2}, {0, 1, 2}}}, {}), InvalidInput);
    CHECK_THROWS_AS(s.fn(data, Matching::identity(2, 3), {}), InvalidInput);
  }
}

TEST_CASE("planted clusters are recovered") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GeneratedData gen = planted(12, 5, 4, seed);
    const std::vector<int> truth = flatten_labels(gen.labels);
    for (const auto& s : kSolvers) {
      if (std::string(s.name) == "interchange") continue;  // a local swap search, not expected to untangle
      const std::string name = s.name;
    CAPTURE(name);
      const SolveResult r = s.fn(gen.data, init_hub_multiple(gen.data), {});
      CHECK(rand_index(cluster_labels(r.matching), truth) == 1.0);
    }
  }
}

TEST_CASE("descent is monotone and terminates") {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + rng() % 6;
    const int m = 2 + static_cast<int>(rng() % 4);
    const int p = 1 + static_cast<int>(rng() % 3);
    const FeatureStack data = oracle::random_stack(rng, n, m, p);
    const Matching start = oracle::random_matching(rng, n, m);
    const double start_objective = objective_pairwise(data, start);
    for (const auto& s : kSolvers) {
      const std::string name = s.name;
    CAPTURE(name);
      SolveOptions opts;
      opts.order = t % 2 ? SweepOrder::random_permutation : SweepOrder::cyclic;
      opts.seed = static_cast<std::uint64_t>(t);
      const SolveResult r = s.fn(data, start, opts);
      check_result(data, r);
      CHECK(r.converged);
      CHECK(r.sweeps <= opts.max_sweeps);
      CHECK(r.objective <= start_objective * (1 + 1e-12) + 1e-12);
      for (std::size_t h = 1; h < r.history.size(); ++h) {
        if (s.ascending) CHECK(r.history[h] >= r.history[h - 1]);
        else CHECK(r.history[h] <= r.history[h - 1]);
      }
      // the closing sweep made no strict improvement; interchange only logs accepted swaps
      if (std::string(s.name) != "interchange" && r.history.size() >= 2)
        CHECK(r.history.back() == r.history[r.history.size() - 2]);
    }
  }
}

TEST_CASE("sweep cap and deadline") {
  std::mt19937_64 rng(35);
  const FeatureStack data = oracle::random_stack(rng, 30, 6, 3);
  const Matching start = oracle::random_matching(rng, 30, 6);
  SolveOptions opts;
  opts.max_sweeps = 1;
  for (const auto& s : kSolvers) {
    const std::string name = s.name;
    CAPTURE(name);
    const SolveResult r = s.fn(data, start, opts);
    CHECK(r.sweeps <= 1);
    check_result(data, r);
  }
  SolveOptions late;
  late.deadline = Clock::now() - std::chrono::seconds(1);
  for (const auto& s : kSolvers) {
    const std::string name = s.name;
    CAPTURE(name);
    const SolveResult r = s.fn(data, start, late);
    CHECK(r.timed_out);
    CHECK(r.matching == start);
  }
  CHECK(exhaustive(oracle::random_stack(rng, 5, 4, 2), late).timed_out);
}

TEST_CASE("rank matching for scalar features") {
  // two copies of (1,2,3) fix the centers
  Eigen::MatrixXd centers(1, 3);
  centers << 1, 2, 3;
  Eigen::MatrixXd x(1, 3);
  x << 3, 1, 2;
  const Matching current = Matching::identity(2, 3);
  const Matching sorted = sort_match_1d(FeatureStack({centers, centers}), current);
  CHECK(sorted == current);
  // the smallest value goes to the smallest center
  const Matching r = sort_match_1d(FeatureStack({centers, centers, centers, centers, x}), Matching::identity(5, 3));
  CHECK(r.perms[4] == Permutation{1, 2, 0});
  std::mt19937_64 rng(36);
  CHECK_THROWS_AS(sort_match_1d(oracle::random_stack(rng, 2, 3, 2), Matching::identity(2, 3)), InvalidInput);

  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 5;
    const int m = 1 + static_cast<int>(rng() % 6);
    const FeatureStack d = oracle::random_stack(rng, n, m, 1);
    const Matching cur = oracle::random_matching(rng, n, m);
    const Matching ranks = sort_match_1d(d, cur);
    const Eigen::MatrixXd c = cluster_centers(d, cur);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::MatrixXd scores = c.transpose() * d.unit(i);
      double v = 0.0;
      for (int k = 0; k < m; ++k) v += scores(k, ranks.perms[i][static_cast<std::size_t>(k)]);
      CHECK(v == doctest::Approx(lap_max(scores).value).epsilon(1e-12));
    }
  }
}

TEST_CASE("ubqp solver") {
  UbqpInstance zero{Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4)};
  const UbqpSolution z = solve_ubqp(zero);
  CHECK(z.value == 0.0);
  CHECK(z.c == std::vector<int>(4, 0));
  CHECK(z.exact);

  std::mt19937_64 rng(37);
  const Eigen::MatrixXd d = oracle::gaussian(rng, 3, 1);
  UbqpInstance single{d.transpose() * d, d.transpose() * d};
  CHECK(solve_ubqp(single).value == doctest::Approx(0.0).epsilon(1e-12));

  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd diffs = oracle::gaussian(rng, 3, 10);
    const Eigen::VectorXd mean = diffs.rowwise().mean();
    UbqpInstance inst{diffs.transpose() * diffs, 10.0 * (diffs.transpose() * mean)};
    const UbqpSolution s = solve_ubqp(inst);
    CHECK(s.exact);
    CHECK(s.value == doctest::Approx(oracle::ubqp_brute(inst)).epsilon(1e-12));
    CHECK(s.value == doctest::Approx(ubqp_value(inst, s.c)).epsilon(1e-12));
  }

  // past the exact limit: a seeded 1-flip local maximum
  const Eigen::MatrixXd big = oracle::gaussian(rng, 4, 24);
  UbqpInstance large{big.transpose() * big, 24.0 * (big.transpose() * big.rowwise().mean())};
  const UbqpSolution h = solve_ubqp(large, 20, 5);
  CHECK_FALSE(h.exact);
  for (std::size_t b = 0; b < h.c.size(); ++b) {
    std::vector<int> flipped = h.c;
    flipped[b] ^= 1;
    CHECK(ubqp_value(large, flipped) <= h.value + 1e-9);
  }
  CHECK(solve_ubqp(large, 20, 5).c == h.c);
}

TEST_CASE("interchange edge cases") {
  std::mt19937_64 rng(38);
  const FeatureStack one_col = oracle::random_stack(rng, 4, 1, 2);
  const SolveResult r = interchange(one_col, Matching::identity(4, 1), {});
  CHECK(r.matching == Matching::identity(4, 1));
  CHECK(r.converged);

  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng() % 3;
    const int m = 2 + static_cast<int>(rng() % 2);
    const FeatureStack data = oracle::random_stack(rng, n, m, 2);
    const SolveResult best = exhaustive(data);
    const SolveResult again = interchange(data, best.matching, {});
    CHECK(again.matching == best.matching);
    CHECK(again.sweeps == 1);
  }
}

TEST_CASE("exhaustive oracle") {
  std::mt19937_64 rng(39);
  const Eigen::MatrixXd x = oracle::gaussian(rng, 2, 3);
  const SolveResult same = exhaustive(FeatureStack({x, x, x}));
  CHECK(same.objective == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(same.matching == Matching::identity(3, 3));

  for (int t = 0; t < 30; ++t) {
    const FeatureStack two = oracle::random_stack(rng, 2, 5, 3);
    // n = 2: objective = sum ||x1||^2 + ||x2||^2 - 2 <X1, X2 P>
    const double direct = two.total_sq_norm() - 2.0 * lap_max(two.unit(0).transpose() * two.unit(1)).value;
    CHECK(exhaustive(two).objective == doctest::Approx(direct).epsilon(1e-10));

    const FeatureStack three = oracle::random_stack(rng, 3, 3, 2);
    const SolveResult opt = exhaustive(three);
    CHECK(opt.matching.perms[0] == Permutation{0, 1, 2});
    CHECK(opt.objective == doctest::Approx(oracle::exhaustive_min(three)).epsilon(1e-10));
    for (const auto& s : kSolvers) {
      CHECK(s.fn(three, init_identity(three), {}).objective >= opt.objective - 1e-9);
    }
  }
  CHECK_THROWS_AS(exhaustive(oracle::random_stack(rng, 6, 6, 2)), InvalidInput);
}

TEST_CASE("unbalanced block coordinate ascent") {
  std::mt19937_64 rng(40);
  // two singletons and two clusters: they split, objective 0
  const UnbalancedStack pair({oracle::gaussian(rng, 2, 1), oracle::gaussian(rng, 2, 1)}, 2);
  const PartialSolveResult split = bca_unbalanced(pair, PartialMatching{{{1}, {1}}}, {});
  CHECK(split.objective == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(split.matching.labels[0] != split.matching.labels[1]);

  // planted: two tight clusters, three units
  Eigen::MatrixXd a(1, 2), b(1, 2), c(1, 2);
  a << 0.0, 10.0;
  b << 10.1, 0.1;
  c << -0.1, 9.9;
  const UnbalancedStack tight({a, b, c}, 2);
  const PartialSolveResult r = bca_unbalanced(tight, PartialMatching{{{1, 2}, {1, 2}, {1, 2}}}, {});
  CHECK(r.matching.labels[0] == std::vector<int>{1, 2});
  CHECK(r.matching.labels[1] == std::vector<int>{2, 1});
  CHECK(r.matching.labels[2] == std::vector<int>{1, 2});

  CHECK_THROWS_AS(bca_unbalanced(tight, PartialMatching{{{1, 1}, {1, 2}, {1, 2}}}, {}), InvalidInput);

  // ragged units stay feasible and descend
  for (int t = 0; t < 30; ++t) {
    const int clusters = 2 + static_cast<int>(rng() % 3);
    std::vector<Eigen::MatrixXd> units;
    PartialMatching start;
    for (int i = 0; i < 5; ++i) {
      const int size = 1 + static_cast<int>(rng() % 5);
      units.push_back(oracle::gaussian(rng, 2, size));
      std::vector<int> labels(static_cast<std::size_t>(size), 0);
      for (int q = 0; q < std::min(size, clusters); ++q) labels[static_cast<std::size_t>(q)] = q + 1;
      std::shuffle(labels.begin(), labels.end(), rng);
      start.labels.push_back(labels);
    }
    const UnbalancedStack data(units, clusters);
    const PartialSolveResult res = bca_unbalanced(data, start, {});
    CHECK_NOTHROW(validate(data, res.matching));
    CHECK(res.converged);
    CHECK(res.objective == doctest::Approx(objective_unbalanced(data, res.matching)).epsilon(1e-10));
    CHECK(res.objective <= objective_unbalanced(data, start) + 1e-9);
    for (std::size_t h = 1; h < res.history.size(); ++h) CHECK(res.history[h] <= res.history[h - 1]);
  }
}
