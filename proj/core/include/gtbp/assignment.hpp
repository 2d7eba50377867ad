#pragma once

#include <vector>

#include <Eigen/Core>

namespace gtbp {

/// Minimum-cost assignment on a rectangular cost matrix (Hungarian method with
/// potentials, O(n^2 m)). Every row is matched when rows <= cols and every
/// column otherwise; entry r of the result is the column of row r or -1.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// Sum of the assigned costs.
double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& rows_to_cols);

}  // namespace gtbp
