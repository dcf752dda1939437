#ifndef IVTEST_PIPELINE_HPP
#define IVTEST_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ivtest/core.hpp"
#include "ivtest/mlik.hpp"
#include "ivtest/nectest.hpp"
#include "ivtest/simlab.hpp"

namespace ivtest {

enum class BinarizeRule { Mean, Median, None };
BinarizeRule binarize_rule_from_name(const std::string& name);
const char* binarize_rule_name(BinarizeRule rule);

struct PipelineConfig {
  std::string z_column = "z";
  std::string x_column = "x";
  std::string y_column = "y";
  std::vector<std::string> covariates;
  BinarizeRule binarize = BinarizeRule::Mean;
  MissingPolicy missing = MissingPolicy::Lenient;
  char delimiter = ',';

  double alpha = 0.05;
  bool monotonicity = false;  // also test the monotonicity inequalities

  bool compute_ratio = true;
  double gamma = 0.0;  // required (> 1) when compute_ratio
  std::set<ViolationClass> violations = {
      ViolationClass::Excl, ViolationClass::Air, ViolationClass::Both};
  double prior_ratio = 1.0;
  EvidenceConfig evidence;
  std::uint64_t seed = 0;
};

// Columns of parsed doubles; NaN marks a cell that failed to parse.
struct NumericTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
  const std::vector<double>& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

// Header row required. Under the strict policy any unparseable cell is a
// ParseError; under the lenient policy it becomes NaN and the row is dropped
// (and counted) once columns are selected downstream.
NumericTable ingest_csv(const std::string& path, char delimiter = ',',
                        MissingPolicy policy = MissingPolicy::Lenient);

struct BinarizedColumn {
  std::vector<int> values;
  double cutoff = 0.0;
};

// value >= cutoff -> 1. Mean rule uses the arithmetic mean, median the lower
// median. Rule `none` requires the column to already be 0/1.
BinarizedColumn binarize(const std::vector<double>& column, BinarizeRule rule);

struct PartialOutResult {
  std::vector<double> residuals;
  std::vector<std::size_t> pruned;  // covariate indices dropped as collinear
};

// OLS residuals of the target on [intercept | covariates] via normal
// equations; collinear columns are pruned before the solve.
PartialOutResult partial_out(const std::vector<double>& target,
                             const std::vector<std::vector<double>>& covariates);

enum class NpsFinal { RejectIv, AcceptIv, Inconclusive };
const char* nps_final_name(NpsFinal d);

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t dropped_rows = 0;
  std::map<std::string, double> cutoffs;
  std::vector<std::string> pruned_covariates;
  std::string binarize_rule;
  double alpha = 0.0;
  double gamma = 0.0;
  double prior_ratio = 1.0;
  bool monotonicity = false;
  std::string violations;
};

struct NpsDecision {
  std::optional<ExactTestReport> pearl;         // binary data
  std::optional<ExactTestReport> monotonicity;  // when enabled
  std::optional<TestOutcome> population;        // non-binary data (LP test)
  std::optional<ValidityReport> validity;
  NpsFinal decision = NpsFinal::Inconclusive;
  Provenance provenance;

  bool necessary_passed() const;
};

// Necessary test at level alpha, then the validity ratio, then the gamma
// rule. Fails of the necessary test short-circuit: no evidence is computed.
NpsDecision run_nps(const Dataset& data, const PipelineConfig& cfg);

// ingest -> partial out -> binarize -> run_nps
NpsDecision run_pipeline(const std::string& csv_path, const PipelineConfig& cfg);
NpsDecision run_pipeline(const NumericTable& table, const PipelineConfig& cfg);

// serializations (stable for fixed config and seed)
std::string nps_decision_to_json(const NpsDecision& d);
std::string validity_report_to_json(const ValidityReport& r);
std::string exact_report_to_json(const ExactTestReport& r);
std::string power_curve_to_csv(const std::vector<PowerCurve>& curves);
std::string power_manifest_to_json(const std::vector<PowerConfig>& configs);
std::string grid_results_to_csv(const std::vector<GridResult>& results);
std::string grid_manifest_to_json(std::uint64_t size, double alpha,
                                  double gamma, std::uint64_t seed,
                                  const EvidenceConfig& cfg);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ivtest

#endif
