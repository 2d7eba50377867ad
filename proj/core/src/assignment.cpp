#include "gtbp/assignment.hpp"

#include <limits>
#include <stdexcept>

namespace gtbp {
namespace {

// Rows <= cols. Classic shortest augmenting path with row/column potentials,
// 1-based internally.
std::vector<int> solve_wide(const Eigen::MatrixXd& a) {
  const auto n = static_cast<int>(a.rows());
  const auto m = static_cast<int>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
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
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) out[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return out;
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw std::invalid_argument("assignment costs must be finite");
  if (cost.rows() == 0) return {};
  if (cost.cols() == 0) return std::vector<int>(static_cast<std::size_t>(cost.rows()), -1);
  if (cost.rows() <= cost.cols()) return solve_wide(cost);

  const Eigen::MatrixXd transposed = cost.transpose();
  const auto cols_to_rows = solve_wide(transposed);
  std::vector<int> out(static_cast<std::size_t>(cost.rows()), -1);
  for (std::size_t c = 0; c < cols_to_rows.size(); ++c) {
    if (cols_to_rows[c] >= 0) out[static_cast<std::size_t>(cols_to_rows[c])] = static_cast<int>(c);
  }
  return out;
}

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& rows_to_cols) {
  double total = 0.0;
  for (std::size_t r = 0; r < rows_to_cols.size(); ++r) {
    if (rows_to_cols[r] >= 0) total += cost(static_cast<Eigen::Index>(r), rows_to_cols[r]);
  }
  return total;
}

}  // namespace gtbp
