#include "ivtest/nectest.hpp"

#include <algorithm>
#include <cmath>

#include "ivtest/lp.hpp"
#include "ivtest/logspace.hpp"

namespace ivtest {

namespace {

std::string ineq_id(const std::string& kind, int x, int y, int k = -1) {
  std::string id = kind + "[x=" + std::to_string(x) + ",y=" + std::to_string(y);
  if (k >= 0) id += ",z=" + std::to_string(k);
  return id + "]";
}

double log_choose(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

TestOutcome pearl_binary_test(const CondProbVector& f, double eps) {
  if (!f.levels.all_binary())
    raise(ErrorCode::NotBinary, "instrumental inequalities need binary levels");
  TestOutcome out;
  out.epsilon = eps;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      double lhs = f.at(0, x, y) + f.at(1, x, 1 - y);
      if (lhs > 1.0 + eps)
        out.violations.push_back({ineq_id("pearl", x, y), lhs, 1.0});
    }
  }
  out.status = out.violations.empty() ? TestStatus::Pass : TestStatus::Fail;
  return out;
}

double instrument_trend(const CondProbVector& f) {
  const Levels& lv = f.levels;
  double trend = 0.0;
  for (int x = 1; x < lv.x; ++x) {
    double hi = 0.0, lo = 0.0;
    for (int xx = x; xx < lv.x; ++xx)
      for (int y = 0; y < lv.y; ++y) {
        hi += f.at(lv.z - 1, xx, y);
        lo += f.at(0, xx, y);
      }
    trend += hi - lo;
  }
  return trend;
}

TestOutcome monotonicity_test(const CondProbVector& f, double eps) {
  const Levels& lv = f.levels;
  TestOutcome out;
  out.epsilon = eps;
  out.z_inverted = instrument_trend(f) < 0.0;

  auto zmap = [&](int k) { return out.z_inverted ? lv.z - 1 - k : k; };
  auto cum_ge = [&](int k, int x, int y) {
    double s = 0.0;
    for (int xx = x; xx < lv.x; ++xx) s += f.at(zmap(k), xx, y);
    return s;
  };
  auto cum_le = [&](int k, int x, int y) {
    double s = 0.0;
    for (int xx = 0; xx <= x; ++xx) s += f.at(zmap(k), xx, y);
    return s;
  };

  for (int k = 0; k + 1 < lv.z; ++k) {
    for (int y = 0; y < lv.y; ++y) {
      // P(Y=y, X>=x | Z) nondecreasing; x=0 spans the whole stratum, skip
      for (int x = 1; x < lv.x; ++x) {
        double lo = cum_ge(k, x, y), hi = cum_ge(k + 1, x, y);
        if (lo > hi + eps)
          out.violations.push_back({ineq_id("mono-ge", x, y, k), lo, hi});
      }
      // P(Y=y, X<=x | Z) nonincreasing; x=m-1 spans the whole stratum, skip
      for (int x = 0; x + 1 < lv.x; ++x) {
        double lo = cum_le(k, x, y), hi = cum_le(k + 1, x, y);
        if (hi > lo + eps)
          out.violations.push_back({ineq_id("mono-le", x, y, k), hi, lo});
      }
    }
  }
  out.status = out.violations.empty() ? TestStatus::Pass : TestStatus::Fail;
  return out;
}

VertexSet enumerate_valid_iv_vertices(const Levels& levels) {
  validate_levels(levels);
  const std::uint64_t gx = treatment_function_count(levels);
  const std::uint64_t fy = outcome_function_count(levels);

  VertexSet V;
  V.levels = levels;
  V.cells.reserve(gx * fy);

  // decode a function index into its output tuple; first domain point is the
  // most significant digit, so indices are lexicographic over output tuples
  auto decode = [](std::uint64_t idx, int base, int points,
                   std::vector<int>& out) {
    out.resize(points);
    for (int p = points - 1; p >= 0; --p) {
      out[p] = static_cast<int>(idx % base);
      idx /= base;
    }
  };

  std::vector<int> g, h;
  for (std::uint64_t rx = 0; rx < gx; ++rx) {
    decode(rx, levels.x, levels.z, g);
    for (std::uint64_t ry = 0; ry < fy; ++ry) {
      decode(ry, levels.y, levels.x, h);
      std::vector<std::uint32_t> cells(levels.z);
      for (int z = 0; z < levels.z; ++z) {
        int x = g[z];
        cells[z] = static_cast<std::uint32_t>(
            cell_index(levels, z, x, h[x]));
      }
      V.cells.push_back(std::move(cells));
    }
  }
  return V;
}

TestOutcome polytope_membership(const CondProbVector& f, const VertexSet& V,
                                double eps) {
  if (!(f.levels == V.levels))
    raise(ErrorCode::LayoutMismatch, "probability vector and vertex set levels differ");

  // drop duplicate vertices
  std::vector<std::vector<std::uint32_t>> verts = V.cells;
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());

  const std::size_t dim = cell_count(f.levels);
  const std::size_t rows = dim + 1;  // cell equalities + convexity row

  std::vector<std::vector<double>> columns(verts.size(),
                                           std::vector<double>(rows, 0.0));
  for (std::size_t k = 0; k < verts.size(); ++k) {
    for (std::uint32_t cell : verts[k]) columns[k][cell] = 1.0;
    columns[k][dim] = 1.0;
  }
  std::vector<double> rhs(rows);
  for (std::size_t i = 0; i < dim; ++i) rhs[i] = f.entries[i];
  rhs[dim] = 1.0;

  FeasibilityResult r = solve_equality_feasibility(columns, rhs);

  TestOutcome out;
  out.epsilon = eps;
  out.residual = r.residual;
  if (!r.converged) {
    out.status = TestStatus::Inconclusive;
    return out;
  }
  if (r.residual <= eps) {
    out.status = TestStatus::Pass;
  } else {
    out.status = TestStatus::Fail;
    out.violations.push_back({"membership-residual", r.residual, eps});
  }
  return out;
}

FisherResult fisher_one_sided(std::uint64_t a, std::uint64_t b,
                              std::uint64_t c, std::uint64_t d,
                              TailDirection direction) {
  if (direction == TailDirection::RowTwoExcess)
    return fisher_one_sided(c, d, a, b, TailDirection::RowOneExcess);

  FisherResult out;
  const std::uint64_t r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) {
    out.degenerate = true;
    out.p_value = 1.0;
    return out;
  }
  const std::uint64_t n = r1 + r2;
  const std::uint64_t kmax = std::min(r1, c1);
  double log_denom = log_choose(n, c1);
  double p = 0.0;
  for (std::uint64_t k = a; k <= kmax; ++k) {
    if (c1 - k > r2) continue;  // infeasible for row two
    p += std::exp(log_choose(r1, k) + log_choose(r2, c1 - k) - log_denom);
  }
  out.p_value = std::min(p, 1.0);
  return out;
}

ExactTestReport exact_test(const ContingencyTable& t, double alpha,
                           NecessaryMode mode, Correction correction) {
  if (!t.levels.all_binary())
    raise(ErrorCode::NotBinary, "exact test is defined for binary data");

  ExactTestReport rep;
  rep.alpha = alpha;
  rep.mode = mode;
  rep.correction = correction;
  rep.per_test_level = correction == Correction::Halved ? alpha / 2.0 : alpha;

  bool invert = false;
  if (mode == NecessaryMode::Monotonicity) {
    double n0 = static_cast<double>(t.stratum_total(0));
    double n1 = static_cast<double>(t.stratum_total(1));
    if (n0 > 0 && n1 > 0) {
      double trend =
          static_cast<double>(t.at(1, 1, 0) + t.at(1, 1, 1)) / n1 -
          static_cast<double>(t.at(0, 1, 0) + t.at(0, 1, 1)) / n0;
      invert = trend < 0.0;
    }
  }
  rep.z_inverted = invert;
  auto Q = [&](int z, int x, int y) { return t.at(invert ? 1 - z : z, x, y); };
  const std::uint64_t n0 = Q(0, 0, 0) + Q(0, 0, 1) + Q(0, 1, 0) + Q(0, 1, 1);
  const std::uint64_t n1 = Q(1, 0, 0) + Q(1, 0, 1) + Q(1, 1, 0) + Q(1, 1, 1);

  auto run = [&](const std::string& id, std::uint64_t a, std::uint64_t b,
                 std::uint64_t c, std::uint64_t d, TailDirection dir) {
    FisherResult fr = fisher_one_sided(a, b, c, d, dir);
    InequalityTestResult res;
    res.id = id;
    res.p_value = fr.p_value;
    res.degenerate = fr.degenerate;
    res.table[0] = a;
    res.table[1] = b;
    res.table[2] = c;
    res.table[3] = d;
    rep.tests.push_back(res);
  };

  if (mode == NecessaryMode::Pearl) {
    // P(Y=y,X=x|Z=0) + P(Y=1-y,X=x|Z=1) <= 1 turns into a one-sided
    // comparison of the stratum-0 cell against the complement of the
    // stratum-1 cell.
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        std::uint64_t a = Q(0, x, y);
        std::uint64_t d = Q(1, x, 1 - y);
        run(ineq_id("pearl", x, y), a, n0 - a, n1 - d, d,
            TailDirection::RowOneExcess);
      }
  } else {
    for (int y = 0; y < 2; ++y) {
      // P(Y=y,X=1|Z=1) >= P(Y=y,X=1|Z=0): excess in stratum 0 is evidence
      std::uint64_t a = Q(0, 1, y), c = Q(1, 1, y);
      run(ineq_id("mono-ge", 1, y, 0), a, n0 - a, c, n1 - c,
          TailDirection::RowOneExcess);
      // P(Y=y,X=0|Z=0) >= P(Y=y,X=0|Z=1): excess in stratum 1 is evidence
      std::uint64_t a2 = Q(0, 0, y), c2 = Q(1, 0, y);
      run(ineq_id("mono-le", 0, y, 0), a2, n0 - a2, c2, n1 - c2,
          TailDirection::RowTwoExcess);
    }
  }

  rep.passed = true;
  for (const auto& res : rep.tests)
    if (res.p_value < rep.per_test_level) rep.passed = false;
  return rep;
}

}  // namespace ivtest
