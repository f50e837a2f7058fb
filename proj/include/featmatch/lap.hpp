#ifndef FEATMATCH_LAP_HPP_
#define FEATMATCH_LAP_HPP_

#include "featmatch/core.hpp"

#include <Eigen/Dense>

namespace featmatch {

// Result of a linear assignment: row k is assigned column assign[k].
struct Assignment {
  std::vector<int> assign;
  double value = 0.0;
};

// Exact square assignment by shortest augmenting paths with dual potentials,
// O(m^3). Deterministic: on ties, Dijkstra prefers a free column, so an
// all-equal matrix yields the identity.
Assignment lap_min(const Eigen::MatrixXd& cost);
Assignment lap_max(const Eigen::MatrixXd& score);

// Injective map from the r rows into the c >= r columns minimizing total cost.
// Rows are zero-padded to a c x c problem and the padding is discarded.
Assignment lap_min_rect(const Eigen::MatrixXd& cost);

}  // namespace featmatch

#endif  // FEATMATCH_LAP_HPP_
