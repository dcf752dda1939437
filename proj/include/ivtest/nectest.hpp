#ifndef IVTEST_NECTEST_HPP
#define IVTEST_NECTEST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ivtest/core.hpp"

namespace ivtest {

enum class TestStatus { Pass, Fail, Inconclusive };

struct Violation {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct TestOutcome {
  TestStatus status = TestStatus::Pass;
  std::vector<Violation> violations;
  double epsilon = 0.0;
  double residual = 0.0;   // LP membership only
  bool z_inverted = false; // monotonicity only

  bool passed() const { return status == TestStatus::Pass; }
};

// Default tolerance for population tests on exact probabilities.
constexpr double kPopulationEps = 1e-12;

// Instrumental inequalities for binary z, x, y:
//   P(Y=y, X=x | Z=0) + P(Y=1-y, X=x | Z=1) <= 1   for all (x, y).
TestOutcome pearl_binary_test(const CondProbVector& f,
                              double eps = kPopulationEps);

// Cumulative-treatment chains for ordered discrete variables: for every y and
// every non-trivial threshold x, P(Y=y, X>=x | Z=z_k) must be nondecreasing
// and P(Y=y, X<=x | Z=z_k) nonincreasing in k. If the instrument's effect on
// the treatment appears negative, the z order is inverted first and the
// inversion is reported.
TestOutcome monotonicity_test(const CondProbVector& f,
                              double eps = kPopulationEps);

// Signed aggregate trend of the treatment in the instrument; for binary data
// this is P(X=1|Z=1) - P(X=1|Z=0).
double instrument_trend(const CondProbVector& f);

// One deterministic response pair (z->x, x->y) per vertex; cells[k][z] is the
// flat cell index the k-th vertex places mass 1 on in stratum z.
struct VertexSet {
  std::vector<std::vector<std::uint32_t>> cells;
  Levels levels;
  std::size_t size() const { return cells.size(); }
};

// All m^l * n^m candidate extreme points of the valid-model polytope
// (duplicates retained).
VertexSet enumerate_valid_iv_vertices(const Levels& levels);

// Feasibility of  sum_k lambda_k e_k = f,  sum lambda = 1,  lambda >= 0.
TestOutcome polytope_membership(const CondProbVector& f, const VertexSet& V,
                                double eps = 1e-8);

enum class TailDirection { RowOneExcess, RowTwoExcess };

struct FisherResult {
  double p_value = 1.0;
  bool degenerate = false;  // a table margin was zero; p = 1 by convention
};

// One-sided exact hypergeometric tail for the 2x2 table (a b / c d): the
// probability, conditional on the margins, of a row-one success count at
// least as extreme as observed in the stated direction.
FisherResult fisher_one_sided(std::uint64_t a, std::uint64_t b,
                              std::uint64_t c, std::uint64_t d,
                              TailDirection direction = TailDirection::RowOneExcess);

enum class NecessaryMode { Pearl, Monotonicity };
enum class Correction { Halved, None };

struct InequalityTestResult {
  std::string id;
  double p_value = 1.0;
  bool degenerate = false;
  std::uint64_t table[4] = {0, 0, 0, 0};  // a, b, c, d
};

struct ExactTestReport {
  std::vector<InequalityTestResult> tests;
  double alpha = 0.0;
  double per_test_level = 0.0;
  Correction correction = Correction::Halved;
  NecessaryMode mode = NecessaryMode::Pearl;
  bool passed = true;  // fail iff any p-value < per_test_level
  bool z_inverted = false;
};

// Finite-sample test: each population inequality becomes a one-sided
// comparison of a cell event across the two z strata. Defined for binary
// data. Pearl mode defaults to the alpha/2 correction, monotonicity to none.
ExactTestReport exact_test(const ContingencyTable& t, double alpha,
                           NecessaryMode mode,
                           Correction correction = Correction::Halved);

}  // namespace ivtest

#endif
