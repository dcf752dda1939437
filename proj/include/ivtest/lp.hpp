#ifndef IVTEST_LP_HPP
#define IVTEST_LP_HPP

#include <cstddef>
#include <vector>

namespace ivtest {

struct FeasibilityResult {
  bool converged = false;  // simplex terminated normally
  double residual = 0.0;   // phase-1 objective at termination
  int iterations = 0;
};

// Phase-1 simplex for the feasibility system  A x = b, x >= 0  with b >= 0.
// Minimizes the sum of artificial variables under Bland's rule; the system is
// feasible iff the returned residual is (numerically) zero. `columns` holds A
// column-major: columns[j][r] is the coefficient of variable j in row r.
FeasibilityResult solve_equality_feasibility(
    const std::vector<std::vector<double>>& columns,
    const std::vector<double>& rhs, int max_iterations = 20000);

}  // namespace ivtest

#endif
