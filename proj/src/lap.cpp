#include "featmatch/lap.hpp"

#include <limits>
#include <string>

namespace featmatch {

namespace {

void require_finite(const Eigen::MatrixXd& a) {
  if (!a.allFinite()) throw InvalidInput("assignment matrix has non-finite entries");
}

// Hungarian method in its O(n^3) form. Arrays are 1-based, index 0 is the
// virtual source column.
std::vector<int> solve_square(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Eigen::Index> owner(static_cast<std::size_t>(n) + 1, 0);  // row matched to column j
  std::vector<Eigen::Index> way(static_cast<std::size_t>(n) + 1, 0);
  std::vector<double> minv(static_cast<std::size_t>(n) + 1);
  std::vector<char> used(static_cast<std::size_t>(n) + 1);

  for (Eigen::Index i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= static_cast<std::size_t>(n); ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, static_cast<Eigen::Index>(j) - 1) - u[static_cast<std::size_t>(i0)] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = static_cast<Eigen::Index>(j0);
        }
        if (minv[j] < delta ||
            (minv[j] == delta && j1 != 0 && owner[j] == 0 && owner[j1] != 0)) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= static_cast<std::size_t>(n); ++j) {
        if (used[j]) {
          u[static_cast<std::size_t>(owner[j])] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const auto j1 = static_cast<std::size_t>(way[j0]);
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assign(static_cast<std::size_t>(n));
  for (std::size_t j = 1; j <= static_cast<std::size_t>(n); ++j) {
    assign[static_cast<std::size_t>(owner[j] - 1)] = static_cast<int>(j) - 1;
  }
  return assign;
}

double assignment_value(const Eigen::MatrixXd& a, const std::vector<int>& assign) {
  double total = 0.0;
  for (std::size_t k = 0; k < assign.size(); ++k) total += a(static_cast<Eigen::Index>(k), assign[k]);
  return total;
}

}  // namespace

Assignment lap_min(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) {
    throw InvalidInput("square assignment needs an m x m matrix, got " + std::to_string(cost.rows()) +
                       "x" + std::to_string(cost.cols()));
  }
  require_finite(cost);
  Assignment out;
  if (cost.rows() == 0) return out;
  out.assign = solve_square(cost);
  out.value = assignment_value(cost, out.assign);
  return out;
}

Assignment lap_max(const Eigen::MatrixXd& score) {
  Assignment out = lap_min(-score);
  out.value = -out.value;
  return out;
}

Assignment lap_min_rect(const Eigen::MatrixXd& cost) {
  if (cost.rows() > cost.cols()) {
    throw InvalidInput("rectangular assignment needs rows <= cols, got " + std::to_string(cost.rows()) +
                       "x" + std::to_string(cost.cols()));
  }
  require_finite(cost);
  const Eigen::Index r = cost.rows();
  const Eigen::Index c = cost.cols();
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(c, c);
  padded.topRows(r) = cost;
  Assignment square = lap_min(padded);
  Assignment out;
  out.assign.assign(square.assign.begin(), square.assign.begin() + r);
  out.value = assignment_value(cost, out.assign);
  return out;
}

}  // namespace featmatch
