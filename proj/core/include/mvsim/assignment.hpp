#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvsim {

struct Assignment {
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;  // sum of cost(i, row_to_col[i]) in row order
};

/// Minimum-cost perfect matching on a dense n x n cost matrix (row-major).
///
/// Shortest augmenting path with row/column potentials (Kuhn-Munkres),
/// O(n^3). Costs must be finite.
Assignment solve_assignment(std::span<const double> cost, std::size_t n);

}  // namespace mvsim
