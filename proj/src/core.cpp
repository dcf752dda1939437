#include "ivtest/core.hpp"

#include <cmath>
#include <string>

namespace ivtest {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::OutOfRangeLevel: return "OutOfRangeLevel";
    case ErrorCode::EmptyStratum: return "EmptyStratum";
    case ErrorCode::CeilingExceeded: return "CeilingExceeded";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::ConstraintUnsatisfiable: return "ConstraintUnsatisfiable";
    case ErrorCode::EstimatorDiverged: return "EstimatorDiverged";
    case ErrorCode::DegenerateMargins: return "DegenerateMargins";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Error";
}

std::uint64_t checked_pow_u64(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (out > (1ULL << 62) / base) return 0;
    out *= base;
  }
  return out;
}

std::uint64_t treatment_function_count(const Levels& levels) {
  return checked_pow_u64(levels.x, levels.z);
}

std::uint64_t outcome_function_count(const Levels& levels) {
  return checked_pow_u64(levels.y, levels.x);
}

std::uint64_t outcome_function_count_excl(const Levels& levels) {
  return checked_pow_u64(levels.y,
                         static_cast<std::uint64_t>(levels.z) * levels.x);
}

void validate_levels(const Levels& levels) {
  if (levels.z < 2 || levels.x < 2 || levels.y < 2)
    raise(ErrorCode::BadConfig, "all level counts must be >= 2");
  std::uint64_t gx = treatment_function_count(levels);
  std::uint64_t fy = outcome_function_count(levels);
  if (gx == 0 || fy == 0 || gx > kResponseSpaceCeiling / fy)
    raise(ErrorCode::CeilingExceeded,
          "response-function space m^l*n^m exceeds " +
              std::to_string(kResponseSpaceCeiling));
}

Dataset validate_dataset(const std::vector<RawRow>& rows, const Levels& levels,
                         MissingPolicy policy) {
  validate_levels(levels);
  if (rows.empty()) raise(ErrorCode::EmptyDataset, "no rows");

  Dataset out;
  out.levels = levels;
  out.rows.reserve(rows.size());
  const long long lim[3] = {levels.z, levels.x, levels.y};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    bool ok = true;
    for (int k = 0; k < 3; ++k) {
      if (rows[i][k] < 0 || rows[i][k] >= lim[k]) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.rows.push_back(Obs{static_cast<int>(rows[i][0]),
                             static_cast<int>(rows[i][1]),
                             static_cast<int>(rows[i][2])});
    } else if (policy == MissingPolicy::Strict) {
      raise(ErrorCode::OutOfRangeLevel, "row " + std::to_string(i));
    } else {
      ++out.dropped;
    }
  }
  if (out.rows.empty())
    raise(ErrorCode::EmptyDataset, "all rows dropped");
  return out;
}

std::uint64_t ContingencyTable::stratum_total(int z) const {
  std::uint64_t s = 0;
  for (int x = 0; x < levels.x; ++x)
    for (int y = 0; y < levels.y; ++y) s += at(z, x, y);
  return s;
}

ContingencyTable build_contingency(const Dataset& d) {
  ContingencyTable t;
  t.levels = d.levels;
  t.counts.assign(cell_count(d.levels), 0);
  for (const Obs& o : d.rows) {
    ++t.counts[cell_index(d.levels, o.z, o.x, o.y)];
    ++t.total;
  }
  return t;
}

CondProbVector cond_prob_vector(const ContingencyTable& t) {
  CondProbVector f;
  f.levels = t.levels;
  f.entries.assign(cell_count(t.levels), 0.0);
  f.stratum_counts.resize(t.levels.z);
  for (int z = 0; z < t.levels.z; ++z) {
    std::uint64_t nz = t.stratum_total(z);
    if (nz == 0)
      raise(ErrorCode::EmptyStratum, "z level " + std::to_string(z) +
                                         " never observed");
    f.stratum_counts[z] = nz;
    for (int x = 0; x < t.levels.x; ++x)
      for (int y = 0; y < t.levels.y; ++y)
        f.entries[cell_index(t.levels, z, x, y)] =
            static_cast<double>(t.at(z, x, y)) / static_cast<double>(nz);
  }
  return f;
}

CondProbVector cond_prob_from_entries(std::vector<double> entries,
                                      const Levels& levels, double tol) {
  if (entries.size() != cell_count(levels))
    raise(ErrorCode::LayoutMismatch, "entry count does not match levels");
  for (int z = 0; z < levels.z; ++z) {
    double s = 0.0;
    for (int x = 0; x < levels.x; ++x)
      for (int y = 0; y < levels.y; ++y) {
        double v = entries[cell_index(levels, z, x, y)];
        if (v < 0.0 || !std::isfinite(v))
          raise(ErrorCode::InvalidProbability, "negative or non-finite entry");
        s += v;
      }
    if (std::abs(s - 1.0) > tol)
      raise(ErrorCode::InvalidProbability,
            "stratum " + std::to_string(z) + " does not sum to 1");
  }
  CondProbVector f;
  f.levels = levels;
  f.entries = std::move(entries);
  f.stratum_counts.assign(levels.z, 0);
  return f;
}

CondProbVector cond_prob_from_joint(const std::vector<double>& joint,
                                    const Levels& levels) {
  if (joint.size() != cell_count(levels))
    raise(ErrorCode::LayoutMismatch, "entry count does not match levels");
  std::vector<double> entries(joint.size(), 0.0);
  for (int z = 0; z < levels.z; ++z) {
    double pz = 0.0;
    for (int x = 0; x < levels.x; ++x)
      for (int y = 0; y < levels.y; ++y)
        pz += joint[cell_index(levels, z, x, y)];
    if (pz <= 0.0)
      raise(ErrorCode::EmptyStratum, "z level " + std::to_string(z) +
                                         " has zero probability");
    for (int x = 0; x < levels.x; ++x)
      for (int y = 0; y < levels.y; ++y) {
        std::size_t i = cell_index(levels, z, x, y);
        entries[i] = joint[i] / pz;
      }
  }
  return cond_prob_from_entries(std::move(entries), levels, 1e-6);
}

}  // namespace ivtest
