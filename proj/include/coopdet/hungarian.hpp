#pragma once

#include <vector>

namespace coopdet {

/// Minimum-cost assignment on a rectangular cost matrix (rows x cols).
/// Returns assignment[row] = col, or -1 for unassigned rows; min(rows, cols)
/// rows are assigned. Kuhn-Munkres with potentials, O(n^3).
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace coopdet
