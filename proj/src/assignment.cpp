#include "ecmatch/assignment.hpp"

#include <cmath>
#include <string>

#include "ecmatch/errors.hpp"

namespace ecmatch {

namespace {

void check_entries(const std::vector<std::vector<double>>& cost) {
  if (cost.empty()) throw ValidationError("assignment: empty cost matrix");
  const std::size_t cols = cost[0].size();
  if (cols == 0) throw ValidationError("assignment: cost matrix has no columns");
  for (const auto& row : cost) {
    if (row.size() != cols) {
      throw ValidationError("assignment: ragged cost matrix");
    }
    for (double c : row) {
      if (std::isnan(c) || c == -kInadmissible) {
        throw ValidationError("assignment: costs must be finite or +infinity");
      }
    }
  }
}

bool kuhn_try_row(const std::vector<std::vector<double>>& cost, int row,
                  std::vector<char>& visited, std::vector<int>& row_of_col) {
  const int cols = static_cast<int>(cost[row].size());
  for (int col = 0; col < cols; ++col) {
    if (visited[col] || cost[row][col] == kInadmissible) continue;
    visited[col] = 1;
    if (row_of_col[col] < 0 ||
        kuhn_try_row(cost, row_of_col[col], visited, row_of_col)) {
      row_of_col[col] = row;
      return true;
    }
  }
  return false;
}

}  // namespace

int max_admissible_matching(const std::vector<std::vector<double>>& cost) {
  check_entries(cost);
  const int rows = static_cast<int>(cost.size());
  const int cols = static_cast<int>(cost[0].size());
  std::vector<int> row_of_col(cols, -1);
  int matched = 0;
  for (int row = 0; row < rows; ++row) {
    std::vector<char> visited(cols, 0);
    if (kuhn_try_row(cost, row, visited, row_of_col)) ++matched;
  }
  return matched;
}

Assignment solve_assignment(const std::vector<std::vector<double>>& cost) {
  check_entries(cost);
  if (cost.size() > cost[0].size()) {
    throw ValidationError("assignment: more rows than columns");
  }
  const int n = static_cast<int>(cost.size());
  const int m = static_cast<int>(cost[0].size());

  // 1-based working arrays; p[j] is the row currently assigned to column j,
  // column 0 is a virtual slot holding the row being inserted.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> min_reduced(m + 1, kInadmissible);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInadmissible;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < min_reduced[j]) {
          min_reduced[j] = cur;
          way[j] = j0;
        }
        if (min_reduced[j] < delta) {
          delta = min_reduced[j];
          j1 = j;
        }
      }
      if (j1 < 0 || delta == kInadmissible) {
        // No augmenting path: the admissible graph has no full assignment.
        const int best = max_admissible_matching(cost);
        throw MatchingError(
            "assignment: no feasible full matching; best admissible matching "
            "covers " + std::to_string(best) + " of " + std::to_string(n) +
                " rows",
            n - best);
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          min_reduced[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment result;
  result.column_of_row.assign(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] > 0) result.column_of_row[p[j] - 1] = j - 1;
  }
  for (int i = 0; i < n; ++i) {
    result.total_cost += cost[i][result.column_of_row[i]];
  }
  return result;
}

}  // namespace ecmatch
