#include "featmatch/gmm.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace featmatch {

double permanent(const Eigen::MatrixXd& a, int max_order) {
  if (a.rows() != a.cols()) throw InvalidInput("permanent needs a square matrix");
  const auto m = static_cast<int>(a.rows());
  if (m > max_order) {
    throw InvalidInput("permanent order " + std::to_string(m) + " exceeds the cap of " + std::to_string(max_order));
  }
  if (!a.allFinite()) throw InvalidInput("permanent input has non-finite entries");
  if (m == 0) return 1.0;

  // per(A) = (-1)^m sum_{S subset of columns} (-1)^|S| prod_i sum_{j in S} a_ij
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(m);
  std::uint32_t subset = 0;
  double total = 0.0;
  const std::uint64_t steps = std::uint64_t{1} << m;
  for (std::uint64_t step = 1; step < steps; ++step) {
    const int j = std::countr_zero(step);
    const std::uint32_t bit = std::uint32_t{1} << j;
    subset ^= bit;
    if (subset & bit) {
      row_sums += a.col(j);
    } else {
      row_sums -= a.col(j);
    }
    const double prod = row_sums.prod();
    total += (std::popcount(subset) & 1) ? -prod : prod;
  }
  return (m & 1) ? -total : total;
}

SinkhornResult sinkhorn(const Eigen::MatrixXd& a, int max_iters, double tol) {
  if (a.rows() != a.cols()) throw InvalidInput("sinkhorn needs a square matrix");
  // zeros are fine as long as no row or column vanishes (diagonal inputs)
  if (!a.allFinite() || (a.size() > 0 && (a.minCoeff() < 0.0 || a.rowwise().sum().minCoeff() <= 0.0 ||
                                          a.colwise().sum().minCoeff() <= 0.0))) {
    throw InvalidInput("sinkhorn needs finite nonnegative entries with no zero row or column");
  }
  SinkhornResult out;
  out.scaled = a;
  auto& b = out.scaled;
  for (;;) {
    const Eigen::VectorXd rows = b.rowwise().sum();
    const Eigen::RowVectorXd cols = b.colwise().sum();
    const double deviation = std::max((rows.array() - 1.0).abs().maxCoeff(), (cols.array() - 1.0).abs().maxCoeff());
    if (deviation <= tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= max_iters) break;
    b.array().colwise() /= rows.array();
    out.log_factor += rows.array().log().sum();
    const Eigen::RowVectorXd scaled_cols = b.colwise().sum();
    b.array().rowwise() /= scaled_cols.array();
    out.log_factor += scaled_cols.array().log().sum();
    ++out.iterations;
  }
  return out;
}

}  // namespace featmatch
