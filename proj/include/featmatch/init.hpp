#ifndef FEATMATCH_INIT_HPP_
#define FEATMATCH_INIT_HPP_

#include "featmatch/core.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace featmatch {

enum class InitKind { identity, random, template_, hub_single, hub_multiple, recursive, label };

// Parsed form of the --init flag: identity | random:R | hub | hub:i |
// hub-cap:C | recursive | label.
struct InitSpec {
  InitKind kind = InitKind::identity;
  int restarts = 1;                  // random only
  std::size_t hub = 0;               // 0-based, hub_single only
  std::size_t cap = 0;               // hub_multiple: 0 means every unit
  std::uint64_t seed = 0;

  static InitSpec parse(const std::string& text);
  std::string str() const;
};

Matching init_identity(const FeatureStack& data);

// Independent uniform permutation per unit (Fisher-Yates, mt19937_64).
Matching init_random(const FeatureStack& data, std::uint64_t seed);

// Each unit matched to the template T by one LAP: min ||X_i P_i - T||_F^2.
Matching init_template(const FeatureStack& data, const Eigen::MatrixXd& templ);

// Single hub: template = X_hub.
Matching init_hub_single(const FeatureStack& data, std::size_t hub);

// Multiple hub: best single-hub matching over every unit as template, or over
// `cap` hubs drawn without replacement when 0 < cap < n. Ties go to the
// smallest hub index.
Matching init_hub_multiple(const FeatureStack& data, std::size_t cap = 0, std::uint64_t seed = 0);

// Recursive heuristic: P_1 = I, then unit i+1 is matched against the running
// sum of units 1..i. With `shuffle_seed` the unit order is a seeded shuffle
// and the first unit in that order keeps the identity.
Matching init_recursive(const FeatureStack& data, std::optional<std::uint64_t> shuffle_seed = std::nullopt);

}  // namespace featmatch

#endif  // FEATMATCH_INIT_HPP_
