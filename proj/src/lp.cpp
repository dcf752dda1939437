#include "ivtest/lp.hpp"

#include <cmath>
#include <cstdint>

namespace ivtest {

namespace {
constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;
}  // namespace

FeasibilityResult solve_equality_feasibility(
    const std::vector<std::vector<double>>& columns,
    const std::vector<double>& rhs, int max_iterations) {
  const std::size_t rows = rhs.size();
  const std::size_t n = columns.size();

  // tableau: rows x (n + rows + 1); artificials form the initial basis
  std::vector<std::vector<double>> tab(rows,
                                       std::vector<double>(n + rows + 1, 0.0));
  for (std::size_t r = 0; r < rows; ++r) {
    double sign = rhs[r] >= 0.0 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < n; ++j) tab[r][j] = sign * columns[j][r];
    tab[r][n + r] = 1.0;
    tab[r].back() = sign * rhs[r];
  }

  // reduced costs for min sum(artificials); basis = artificials
  std::vector<double> cost(n + rows, 0.0);
  double objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += tab[r][j];
    cost[j] = -s;
  }
  for (std::size_t r = 0; r < rows; ++r) objective += tab[r].back();

  std::vector<std::size_t> basis(rows);
  for (std::size_t r = 0; r < rows; ++r) basis[r] = n + r;

  FeasibilityResult result;
  for (int it = 0; it < max_iterations; ++it) {
    // Bland: entering = lowest-index column with negative reduced cost
    std::size_t enter = n + rows;
    for (std::size_t j = 0; j < n + rows; ++j) {
      if (cost[j] < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (enter == n + rows) {
      result.converged = true;
      result.iterations = it;
      break;
    }

    // ratio test; ties broken by lowest basis index (Bland)
    std::size_t leave = rows;
    double best_ratio = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (tab[r][enter] > kPivotTol) {
        double ratio = tab[r].back() / tab[r][enter];
        if (leave == rows || ratio < best_ratio - kPivotTol ||
            (std::abs(ratio - best_ratio) <= kPivotTol &&
             basis[r] < basis[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
    }
    if (leave == rows) break;  // unbounded; cannot happen for phase 1

    // pivot
    double piv = tab[leave][enter];
    for (double& v : tab[leave]) v /= piv;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == leave) continue;
      double factor = tab[r][enter];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= n + rows; ++j)
        tab[r][j] -= factor * tab[leave][j];
    }
    double cfac = cost[enter];
    if (cfac != 0.0) {
      for (std::size_t j = 0; j < n + rows; ++j)
        cost[j] -= cfac * tab[leave][j];
      objective -= cfac * tab[leave].back();
    }
    basis[leave] = enter;
    result.iterations = it + 1;
  }

  // objective = remaining artificial mass
  double residual = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    if (basis[r] >= n) residual += tab[r].back();
  result.residual = std::max(residual, 0.0);
  return result;
}

}  // namespace ivtest
