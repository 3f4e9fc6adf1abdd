#include "coopdet/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coopdet {

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int rows = static_cast<int>(cost.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(cost.front().size());
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != cols)
      throw std::invalid_argument("solve_assignment: ragged cost matrix");
  }

  // pad to a square matrix; padding cost dominates every finite entry
  double max_finite = 0.0;
  for (const auto& row : cost) {
    for (double v : row) {
      if (std::isfinite(v)) max_finite = std::max(max_finite, std::abs(v));
    }
  }
  const double pad = 1e6 * std::max(1.0, max_finite);
  const int n = std::max(rows, cols);

  auto at = [&](int r, int c) -> double {
    if (r < rows && c < cols) return cost[r][c];
    return pad;
  };

  // Kuhn-Munkres with row/column potentials (1-indexed internals)
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match_col(n + 1, 0);  // match_col[c] = row matched to column c
  std::vector<int> way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match_col[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const int j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> assignment(rows, -1);
  for (int j = 1; j <= n; ++j) {
    const int r = match_col[j] - 1;
    if (r < rows && j - 1 < cols) assignment[r] = j - 1;
  }
  return assignment;
}

}  // namespace coopdet
