#include "featmatch/search.hpp"

#include <bit>
#include <random>

namespace featmatch {

namespace {

void check_instance(const UbqpInstance& inst) {
  const auto n = inst.gram.rows();
  if (inst.gram.cols() != n || inst.linear.size() != n) throw InvalidInput("UBQP shapes are inconsistent");
  if (!inst.gram.allFinite() || !inst.linear.allFinite()) throw InvalidInput("UBQP instance has non-finite entries");
}

// Gray-code walk over {0,1}^n. field(j) = sum_i c_i G_ij is kept current so
// each flip costs O(n).
UbqpSolution enumerate(const UbqpInstance& inst) {
  const auto n = static_cast<int>(inst.gram.rows());
  const auto& g = inst.gram;
  std::vector<int> c(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd field = Eigen::VectorXd::Zero(n);
  UbqpSolution best{c, 0.0, true};
  double value = 0.0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t step = 1; step < total; ++step) {
    const int j = std::countr_zero(step);
    auto& cj = c[static_cast<std::size_t>(j)];
    if (cj == 0) {
      value += 2.0 * field(j) + g(j, j) - inst.linear(j);
      cj = 1;
      field += g.col(j);
    } else {
      field -= g.col(j);
      cj = 0;
      value -= 2.0 * field(j) + g(j, j) - inst.linear(j);
    }
    if (value > best.value) {
      best.value = value;
      best.c = c;
    }
  }
  best.value = ubqp_value(inst, best.c);
  return best;
}

UbqpSolution climb(const UbqpInstance& inst, std::vector<int> c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  const auto& g = inst.gram;
  Eigen::VectorXd field = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (c[static_cast<std::size_t>(i)]) field += g.col(i);
  }
  for (;;) {
    double best_gain = 0.0;
    Eigen::Index best_j = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool on = c[static_cast<std::size_t>(j)] != 0;
      // field excludes j's own term only when c_j = 0.
      const double gain = on ? -(2.0 * (field(j) - g(j, j)) + g(j, j) - inst.linear(j))
                             : 2.0 * field(j) + g(j, j) - inst.linear(j);
      if (gain > best_gain) {
        best_gain = gain;
        best_j = j;
      }
    }
    if (best_j < 0) break;
    auto& cj = c[static_cast<std::size_t>(best_j)];
    if (cj) {
      field -= g.col(best_j);
      cj = 0;
    } else {
      field += g.col(best_j);
      cj = 1;
    }
  }
  UbqpSolution out{std::move(c), 0.0, false};
  out.value = ubqp_value(inst, out.c);
  return out;
}

}  // namespace

double ubqp_value(const UbqpInstance& inst, const std::vector<int>& c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Eigen::Index>(i)) = c[i];
  return v.dot(inst.gram * v) - inst.linear.dot(v);
}

UbqpSolution solve_ubqp(const UbqpInstance& inst, int exact_limit, std::uint64_t seed, int restarts) {
  check_instance(inst);
  const auto n = static_cast<int>(inst.gram.rows());
  if (n <= exact_limit && n < 63) return enumerate(inst);

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  UbqpSolution best = climb(inst, std::vector<int>(static_cast<std::size_t>(n), 0));
  for (int r = 1; r < restarts; ++r) {
    std::vector<int> c(static_cast<std::size_t>(n));
    for (auto& bit : c) bit = coin(rng) ? 1 : 0;
    UbqpSolution local = climb(inst, std::move(c));
    if (local.value > best.value) best = std::move(local);
  }
  return best;
}

}  // namespace featmatch
