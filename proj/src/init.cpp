#include "featmatch/init.hpp"

#include "featmatch/lap.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace featmatch {

namespace {

Permutation uniform_permutation(int m, std::mt19937_64& rng) {
  Permutation perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  for (int k = m - 1; k > 0; --k) {
    std::uniform_int_distribution<int> pick(0, k);
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(pick(rng))]);
  }
  return perm;
}

// Best permutation of x's columns against the columns of `target`.
Permutation match_to(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) {
  const Eigen::MatrixXd scores = target.transpose() * x;  // (k, l) = <t_k, x_l>
  return lap_max(scores).assign;
}

std::size_t parse_index(const std::string& text, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(text, &pos);
    if (pos != text.size() || v < 0) throw InvalidInput("");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InvalidInput("invalid " + what + " in init spec: '" + text + "'");
  }
}

}  // namespace

InitSpec InitSpec::parse(const std::string& text) {
  InitSpec spec;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  if (head == "identity" && arg.empty()) {
    spec.kind = InitKind::identity;
  } else if (head == "random") {
    spec.kind = InitKind::random;
    spec.restarts = arg.empty() ? 1 : static_cast<int>(parse_index(arg, "restart count"));
    if (spec.restarts < 1) throw InvalidInput("random init needs at least one restart");
  } else if (head == "hub") {
    if (arg.empty()) {
      spec.kind = InitKind::hub_multiple;
    } else {
      spec.kind = InitKind::hub_single;
      const std::size_t hub = parse_index(arg, "hub index");
      if (hub < 1) throw InvalidInput("hub index is 1-based");
      spec.hub = hub - 1;
    }
  } else if (head == "hub-cap") {
    spec.kind = InitKind::hub_multiple;
    spec.cap = parse_index(arg, "hub cap");
  } else if (head == "recursive" && arg.empty()) {
    spec.kind = InitKind::recursive;
  } else if (head == "template" && arg.empty()) {
    spec.kind = InitKind::template_;
  } else if (head == "label" && arg.empty()) {
    spec.kind = InitKind::label;
  } else {
    throw InvalidInput("unknown init '" + text + "'");
  }
  return spec;
}

std::string InitSpec::str() const {
  switch (kind) {
    case InitKind::identity: return "identity";
    case InitKind::random: return "random:" + std::to_string(restarts);
    case InitKind::template_: return "template";
    case InitKind::hub_single: return "hub:" + std::to_string(hub + 1);
    case InitKind::hub_multiple: return cap == 0 ? "hub" : "hub-cap:" + std::to_string(cap);
    case InitKind::recursive: return "recursive";
    case InitKind::label: return "label";
  }
  return "unknown";
}

Matching init_identity(const FeatureStack& data) {
  return Matching::identity(data.n(), static_cast<int>(data.m()));
}

Matching init_random(const FeatureStack& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matching out;
  out.perms.reserve(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) out.perms.push_back(uniform_permutation(static_cast<int>(data.m()), rng));
  return out;
}

Matching init_template(const FeatureStack& data, const Eigen::MatrixXd& templ) {
  if (templ.rows() != data.p() || templ.cols() != data.m()) {
    throw InvalidInput("template must be " + std::to_string(data.p()) + "x" + std::to_string(data.m()));
  }
  if (!templ.allFinite()) throw InvalidInput("template contains NaN or Inf");
  Matching out;
  out.perms.reserve(data.n());
  for (const auto& x : data.units()) out.perms.push_back(match_to(x, templ));
  return out;
}

Matching init_hub_single(const FeatureStack& data, std::size_t hub) {
  if (hub >= data.n()) {
    throw InvalidInput("hub index " + std::to_string(hub + 1) + " out of range 1.." + std::to_string(data.n()));
  }
  return init_template(data, data.unit(hub));
}

Matching init_hub_multiple(const FeatureStack& data, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> hubs(data.n());
  std::iota(hubs.begin(), hubs.end(), std::size_t{0});
  if (cap > 0 && cap < data.n()) {
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < cap; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, hubs.size() - 1);
      std::swap(hubs[k], hubs[pick(rng)]);
    }
    hubs.resize(cap);
    std::sort(hubs.begin(), hubs.end());
  }
  Matching best;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t hub : hubs) {
    Matching candidate = init_hub_single(data, hub);
    const double value = objective_pairwise(data, candidate);
    if (value < best_value) {
      best_value = value;
      best = std::move(candidate);
    }
  }
  return best;
}

Matching init_recursive(const FeatureStack& data, std::optional<std::uint64_t> shuffle_seed) {
  std::vector<std::size_t> order(data.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    for (std::size_t k = order.size(); k > 1; --k) {
      std::uniform_int_distribution<std::size_t> pick(0, k - 1);
      std::swap(order[k - 1], order[pick(rng)]);
    }
  }
  Matching out = init_identity(data);
  Eigen::MatrixXd sum = data.unit(order.front());
  for (std::size_t t = 1; t < order.size(); ++t) {
    const std::size_t i = order[t];
    out.perms[i] = match_to(data.unit(i), sum);
    sum += permute_columns(data.unit(i), out.perms[i]);
  }
  return out;
}

}  // namespace featmatch
