#include "featmatch/harness.hpp"

#include <numeric>
#include <random>

namespace featmatch {

GenConfig GenConfig::digitslike(std::size_t n, std::uint64_t seed) {
  GenConfig config;
  config.n = n;
  config.m = 10;
  config.p = 64;
  config.center_sd = 8.0;
  config.class_sd = {5.0};
  config.noise_sd = 2.5;
  config.seed = seed;
  return config;
}

void GenConfig::check() const {
  if (n < 1 || m < 1 || p < 1) throw InvalidInput("generator needs n, m, p >= 1");
  if (!(center_sd >= 0.0) || !(noise_sd >= 0.0)) throw InvalidInput("generator spreads must be nonnegative");
  if (class_sd.size() != 1 && class_sd.size() != static_cast<std::size_t>(m)) {
    throw InvalidInput("class_sd needs one value or one per class");
  }
  for (double sd : class_sd) {
    if (!(sd >= 0.0)) throw InvalidInput("class spreads must be nonnegative");
  }
  if (means && (means->rows() != p || means->cols() != m || !means->allFinite())) {
    throw InvalidInput("user means must be a finite p x m matrix");
  }
}

GeneratedData generate(const GenConfig& config) {
  config.check();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index rows) {
    Eigen::VectorXd v(rows);
    for (Eigen::Index r = 0; r < rows; ++r) v(r) = normal(rng);
    return v;
  };

  Eigen::MatrixXd means(config.p, config.m);
  if (config.means) {
    means = *config.means;
  } else {
    for (int k = 0; k < config.m; ++k) means.col(k) = config.center_sd * gaussian(config.p);
  }
  auto class_sd = [&](int k) {
    return config.class_sd.size() == 1 ? config.class_sd.front() : config.class_sd[static_cast<std::size_t>(k)];
  };

  std::vector<Eigen::MatrixXd> units;
  std::vector<std::vector<int>> labels;
  units.reserve(config.n);
  labels.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    std::vector<int> shuffle(static_cast<std::size_t>(config.m));
    std::iota(shuffle.begin(), shuffle.end(), 0);
    for (int k = config.m - 1; k > 0; --k) {
      std::uniform_int_distribution<int> pick(0, k);
      std::swap(shuffle[static_cast<std::size_t>(k)], shuffle[static_cast<std::size_t>(pick(rng))]);
    }
    Eigen::MatrixXd x(config.p, config.m);
    for (int k = 0; k < config.m; ++k) {
      const int cls = shuffle[static_cast<std::size_t>(k)];
      x.col(k) = means.col(cls) + class_sd(cls) * gaussian(config.p) + config.noise_sd * gaussian(config.p);
    }
    units.push_back(std::move(x));
    labels.push_back(std::move(shuffle));
  }
  return GeneratedData{FeatureStack(std::move(units)), std::move(labels), std::move(means)};
}

Matching plant_matching(const std::vector<std::vector<int>>& labels) {
  Matching out;
  out.perms.reserve(labels.size());
  for (const auto& unit : labels) {
    Permutation perm(unit.size());
    for (std::size_t k = 0; k < unit.size(); ++k) perm[static_cast<std::size_t>(unit[k])] = static_cast<int>(k);
    out.perms.push_back(std::move(perm));
  }
  return out;
}

std::vector<int> flatten_labels(const std::vector<std::vector<int>>& labels) {
  std::vector<int> flat;
  for (const auto& unit : labels) flat.insert(flat.end(), unit.begin(), unit.end());
  return flat;
}

}  // namespace featmatch
