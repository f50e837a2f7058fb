#include "featmatch/harness.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace featmatch {

namespace {

double pairs(double count) { return count * (count - 1.0) / 2.0; }

}  // namespace

double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InvalidInput("rand index needs partitions of the same items");
  if (a.size() < 2) throw InvalidInput("rand index needs at least two items");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> count_a, count_b;
  for (std::size_t t = 0; t < a.size(); ++t) {
    joint[{a[t], b[t]}] += 1.0;
    count_a[a[t]] += 1.0;
    count_b[b[t]] += 1.0;
  }
  double same_both = 0.0, same_a = 0.0, same_b = 0.0;
  for (const auto& [key, c] : joint) same_both += pairs(c);
  for (const auto& [key, c] : count_a) same_a += pairs(c);
  for (const auto& [key, c] : count_b) same_b += pairs(c);
  const double total = pairs(static_cast<double>(a.size()));
  // agreements = same in both + different in both
  const double diff_both = total - same_a - same_b + same_both;
  return (same_both + diff_both) / total;
}

std::vector<double> relative_error(const std::vector<double>& values) {
  if (values.empty()) throw InvalidInput("relative error needs at least one value");
  double best = std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isfinite(v)) best = std::min(best, v);
  }
  if (!std::isfinite(best)) throw InvalidInput("relative error needs at least one finite value");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    } else if (best == 0.0) {
      out.push_back(v == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    } else {
      out.push_back(v / best - 1.0);
    }
  }
  return out;
}

}  // namespace featmatch
