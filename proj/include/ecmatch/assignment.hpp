#pragma once

#include <limits>
#include <vector>

namespace ecmatch {

// Cost marking a forbidden row/column pair.
inline constexpr double kInadmissible = std::numeric_limits<double>::infinity();

struct Assignment {
  std::vector<int> column_of_row;  // size = rows; distinct values in [0, cols)
  double total_cost = 0.0;
};

// Minimum-cost assignment of every row to a distinct column for a rectangular
// cost matrix with rows <= cols. Successive shortest augmenting paths with
// dual potentials; O(rows^2 * cols). Ties are broken by scanning columns in
// ascending index order, so the result is deterministic. Throws MatchingError
// when no assignment covers every row (it reports how many rows the best
// admissible matching leaves uncovered).
Assignment solve_assignment(const std::vector<std::vector<double>>& cost);

// Size of the largest row/column matching that uses only admissible
// (finite-cost) pairs. Used to report how far from feasible an instance is.
int max_admissible_matching(const std::vector<std::vector<double>>& cost);

}  // namespace ecmatch
