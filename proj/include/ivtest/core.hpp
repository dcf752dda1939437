#ifndef IVTEST_CORE_HPP
#define IVTEST_CORE_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "ivtest/error.hpp"

namespace ivtest {

// Largest admissible response-function space m^l * n^m. Larger
// configurations make the downstream integrals infeasible.
constexpr std::uint64_t kResponseSpaceCeiling = 1'000'000;

// Discrete level counts for the instrument (z), treatment (x) and outcome (y).
struct Levels {
  int z = 2;
  int x = 2;
  int y = 2;

  bool operator==(const Levels&) const = default;
  bool all_binary() const { return z == 2 && x == 2 && y == 2; }
};

// Throws CeilingExceeded / BadConfig when the configuration is unusable.
void validate_levels(const Levels& levels);

// base^exp, or 0 if the result would overflow past 2^62
std::uint64_t checked_pow_u64(std::uint64_t base, std::uint64_t exp);

// m^l (number of z->x response functions)
std::uint64_t treatment_function_count(const Levels& levels);
// n^m (number of x->y response functions)
std::uint64_t outcome_function_count(const Levels& levels);
// n^(l*m) (number of (x,z)->y response functions)
std::uint64_t outcome_function_count_excl(const Levels& levels);

inline std::size_t cell_count(const Levels& levels) {
  return static_cast<std::size_t>(levels.z) * levels.x * levels.y;
}

inline std::size_t cell_index(const Levels& levels, int z, int x, int y) {
  return (static_cast<std::size_t>(z) * levels.x + x) * levels.y + y;
}

struct Obs {
  int z = 0;
  int x = 0;
  int y = 0;
  bool operator==(const Obs&) const = default;
};

struct Dataset {
  std::vector<Obs> rows;
  Levels levels;
  std::uint64_t dropped = 0;  // rows removed under the lenient policy
};

enum class MissingPolicy { Strict, Lenient };

// Raw rows use negative components to mark missing values.
using RawRow = std::array<long long, 3>;

Dataset validate_dataset(const std::vector<RawRow>& rows, const Levels& levels,
                         MissingPolicy policy = MissingPolicy::Strict);

// Cell counts Q_j over all l*m*n cells (zeros materialized).
struct ContingencyTable {
  std::vector<std::uint64_t> counts;  // indexed by cell_index
  Levels levels;
  std::uint64_t total = 0;

  std::uint64_t at(int z, int x, int y) const {
    return counts[cell_index(levels, z, x, y)];
  }
  std::uint64_t stratum_total(int z) const;
};

ContingencyTable build_contingency(const Dataset& d);

// P(X, Y | Z): per-z stratum conditional probabilities.
struct CondProbVector {
  std::vector<double> entries;  // indexed by cell_index
  std::vector<std::uint64_t> stratum_counts;
  Levels levels;

  double at(int z, int x, int y) const {
    return entries[cell_index(levels, z, x, y)];
  }
};

CondProbVector cond_prob_vector(const ContingencyTable& t);

// Wraps an externally computed probability vector (e.g. an exact model
// distribution) as a CondProbVector; checks per-stratum normalization.
CondProbVector cond_prob_from_entries(std::vector<double> entries,
                                      const Levels& levels,
                                      double tol = 1e-9);

// Joint cell probabilities -> conditional P(X,Y|Z).
CondProbVector cond_prob_from_joint(const std::vector<double>& joint,
                                    const Levels& levels);

}  // namespace ivtest

#endif
