#include "ivtest/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ivtest {

using ordered_json = nlohmann::ordered_json;

BinarizeRule binarize_rule_from_name(const std::string& name) {
  if (name == "mean") return BinarizeRule::Mean;
  if (name == "median") return BinarizeRule::Median;
  if (name == "none") return BinarizeRule::None;
  raise(ErrorCode::BadConfig, "unknown binarize rule '" + name + "'");
}

const char* binarize_rule_name(BinarizeRule rule) {
  switch (rule) {
    case BinarizeRule::Mean: return "mean";
    case BinarizeRule::Median: return "median";
    case BinarizeRule::None: return "none";
  }
  return "?";
}

const char* nps_final_name(NpsFinal d) {
  switch (d) {
    case NpsFinal::RejectIv: return "REJECT-IV";
    case NpsFinal::AcceptIv: return "ACCEPT-IV";
    case NpsFinal::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

const std::vector<double>& NumericTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  raise(ErrorCode::MissingColumn, name);
}

bool NumericTable::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) {
    // trim whitespace and a possible trailing CR
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

NumericTable ingest_csv(const std::string& path, char delimiter,
                        MissingPolicy policy) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::FileNotFound, path);

  std::string line;
  if (!std::getline(in, line))
    raise(ErrorCode::ParseError, "empty file " + path);

  NumericTable table;
  table.names = split_line(line, delimiter);
  if (table.names.empty()) raise(ErrorCode::ParseError, "empty header");
  table.columns.assign(table.names.size(), {});

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::vector<std::string> fields = split_line(line, delimiter);
    if (fields.size() != table.names.size())
      raise(ErrorCode::ParseError,
            "row " + std::to_string(row) + " has " +
                std::to_string(fields.size()) + " fields, expected " +
                std::to_string(table.names.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v;
      if (!parse_double(fields[c], v)) {
        if (policy == MissingPolicy::Strict)
          raise(ErrorCode::ParseError, "row " + std::to_string(row) +
                                           ", column " + table.names[c]);
        v = std::numeric_limits<double>::quiet_NaN();
      }
      table.columns[c].push_back(v);
    }
  }
  return table;
}

BinarizedColumn binarize(const std::vector<double>& column, BinarizeRule rule) {
  if (column.empty()) raise(ErrorCode::EmptyDataset, "empty column");

  BinarizedColumn out;
  out.values.reserve(column.size());

  if (rule == BinarizeRule::None) {
    for (double v : column) {
      if (v != 0.0 && v != 1.0)
        raise(ErrorCode::NotBinary, "rule 'none' needs 0/1 data");
      out.values.push_back(static_cast<int>(v));
    }
    out.cutoff = 0.5;
    return out;
  }

  bool constant = true;
  for (double v : column)
    if (v != column.front()) {
      constant = false;
      break;
    }
  if (constant)
    raise(ErrorCode::DegenerateColumn, "all values equal; cutoff meaningless");

  if (rule == BinarizeRule::Mean) {
    double s = 0.0;
    for (double v : column) s += v;
    out.cutoff = s / static_cast<double>(column.size());
  } else {
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    out.cutoff = sorted[(sorted.size() - 1) / 2];  // lower median
  }
  for (double v : column) out.values.push_back(v >= out.cutoff ? 1 : 0);
  return out;
}

namespace {

// Cholesky solve of G b = r; returns false when G is not SPD.
bool spd_solve(std::vector<std::vector<double>>& g, std::vector<double>& r) {
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = g[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= g[i][k] * g[j][k];
      if (i == j) {
        if (s <= 0.0) return false;
        g[i][i] = std::sqrt(s);
      } else {
        g[i][j] = s / g[j][j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = r[i];
    for (std::size_t k = 0; k < i; ++k) s -= g[i][k] * r[k];
    r[i] = s / g[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = r[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= g[k][i] * r[k];
    r[i] = s / g[i][i];
  }
  return true;
}

}  // namespace

PartialOutResult partial_out(const std::vector<double>& target,
                             const std::vector<std::vector<double>>& covariates) {
  const std::size_t n = target.size();
  if (n == 0) raise(ErrorCode::EmptyDataset, "empty target");
  for (const auto& c : covariates)
    if (c.size() != n)
      raise(ErrorCode::LayoutMismatch, "covariate length mismatch");

  PartialOutResult out;

  // greedy pruning: orthogonalize each candidate against the accepted basis
  // and drop it when nothing remains
  std::vector<std::vector<double>> basis;  // orthonormal
  std::vector<double> ones(n, 1.0 / std::sqrt(static_cast<double>(n)));
  basis.push_back(ones);
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < covariates.size(); ++c) {
    std::vector<double> v = covariates[c];
    double orig = 0.0;
    for (double x : v) orig += x * x;
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= dot * b[i];
    }
    double rem = 0.0;
    for (double x : v) rem += x * x;
    if (rem <= std::max(orig, 1.0) * 1e-20) {
      out.pruned.push_back(c);
      continue;
    }
    kept.push_back(c);
    double norm = std::sqrt(rem);
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }

  // normal equations on [intercept | kept covariates]
  const std::size_t p = kept.size() + 1;
  auto col = [&](std::size_t j) -> const double* {
    static const std::vector<double> intercept;
    return j == 0 ? nullptr : covariates[kept[j - 1]].data();
  };
  std::vector<std::vector<double>> g(p, std::vector<double>(p, 0.0));
  std::vector<double> rhs(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      double xa = a == 0 ? 1.0 : col(a)[i];
      rhs[a] += xa * target[i];
      for (std::size_t b = 0; b <= a; ++b) {
        double xb = b == 0 ? 1.0 : col(b)[i];
        g[a][b] += xa * xb;
      }
    }
  }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) g[a][b] = g[b][a];

  if (!spd_solve(g, rhs))
    raise(ErrorCode::RankDeficient, "normal equations not positive definite");

  out.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double fit = rhs[0];
    for (std::size_t a = 1; a < p; ++a) fit += rhs[a] * col(a)[i];
    out.residuals[i] = target[i] - fit;
  }
  return out;
}

bool NpsDecision::necessary_passed() const {
  if (population && !population->passed()) return false;
  if (pearl && !pearl->passed) return false;
  if (monotonicity && !monotonicity->passed) return false;
  return true;
}

NpsDecision run_nps(const Dataset& data, const PipelineConfig& cfg) {
  if (cfg.compute_ratio) {
    if (!(cfg.gamma > 1.0))
      raise(ErrorCode::BadConfig, "gamma must exceed 1");
    if (cfg.violations.empty())
      raise(ErrorCode::BadConfig, "at least one violation class is required");
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    raise(ErrorCode::BadConfig, "alpha must lie in (0, 1)");

  NpsDecision d;
  d.provenance.seed = cfg.seed;
  d.provenance.dropped_rows = data.dropped;
  d.provenance.alpha = cfg.alpha;
  d.provenance.gamma = cfg.gamma;
  d.provenance.prior_ratio = cfg.prior_ratio;
  d.provenance.monotonicity = cfg.monotonicity;
  d.provenance.binarize_rule = "";
  for (ViolationClass v : cfg.violations) {
    if (!d.provenance.violations.empty()) d.provenance.violations += ",";
    d.provenance.violations += violation_class_name(v);
  }

  ContingencyTable table = build_contingency(data);

  if (data.levels.all_binary()) {
    d.pearl = exact_test(table, cfg.alpha, NecessaryMode::Pearl,
                         Correction::Halved);
    if (cfg.monotonicity)
      d.monotonicity = exact_test(table, cfg.alpha,
                                  NecessaryMode::Monotonicity,
                                  Correction::None);
  } else {
    CondProbVector f = cond_prob_vector(table);
    TestOutcome lp =
        polytope_membership(f, enumerate_valid_iv_vertices(data.levels));
    if (cfg.monotonicity) {
      TestOutcome mono = monotonicity_test(f, 1e-9);
      if (!mono.passed()) {
        for (auto& v : mono.violations) lp.violations.push_back(v);
        if (lp.status == TestStatus::Pass) lp.status = TestStatus::Fail;
      }
    }
    d.population = lp;
  }

  if (!d.necessary_passed()) {
    d.decision = NpsFinal::RejectIv;
    return d;
  }

  if (!cfg.compute_ratio || !data.levels.all_binary()) {
    d.decision = NpsFinal::Inconclusive;
    return d;
  }

  EvidenceConfig ecfg = cfg.evidence;
  ecfg.seed = cfg.seed;
  d.validity = validity_ratio(table, cfg.violations, cfg.prior_ratio,
                              cfg.gamma, ecfg);
  switch (d.validity->decision) {
    case RatioDecision::Accept: d.decision = NpsFinal::AcceptIv; break;
    case RatioDecision::Reject: d.decision = NpsFinal::RejectIv; break;
    case RatioDecision::Inconclusive:
      d.decision = NpsFinal::Inconclusive;
      break;
  }
  return d;
}

namespace {

struct PreparedColumns {
  Dataset dataset;
  Provenance provenance;
};

PreparedColumns prepare(const NumericTable& table, const PipelineConfig& cfg) {
  const std::vector<std::string> wanted = {cfg.z_column, cfg.x_column,
                                           cfg.y_column};
  std::vector<const std::vector<double>*> cols;
  for (const auto& name : wanted) cols.push_back(&table.column(name));
  std::vector<const std::vector<double>*> covs;
  for (const auto& name : cfg.covariates) covs.push_back(&table.column(name));

  // drop rows with missing values in any selected column
  std::size_t n = table.rows();
  std::vector<bool> keep(n, true);
  std::uint64_t dropped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool miss = false;
    for (auto* c : cols) miss = miss || std::isnan((*c)[i]);
    for (auto* c : covs) miss = miss || std::isnan((*c)[i]);
    if (miss) {
      if (cfg.missing == MissingPolicy::Strict)
        raise(ErrorCode::ParseError, "missing value in row " + std::to_string(i + 1));
      keep[i] = false;
      ++dropped;
    }
  }

  auto filtered = [&](const std::vector<double>& src) {
    std::vector<double> out;
    out.reserve(n - dropped);
    for (std::size_t i = 0; i < n; ++i)
      if (keep[i]) out.push_back(src[i]);
    return out;
  };

  std::vector<double> z = filtered(*cols[0]);
  std::vector<double> x = filtered(*cols[1]);
  std::vector<double> y = filtered(*cols[2]);
  if (z.empty()) raise(ErrorCode::EmptyDataset, "no usable rows");

  std::vector<std::vector<double>> cov_data;
  for (auto* c : covs) cov_data.push_back(filtered(*c));

  PreparedColumns out;
  out.provenance.dropped_rows = dropped;

  if (!cov_data.empty()) {
    std::vector<std::size_t> pruned_union;
    auto residualize = [&](std::vector<double>& col) {
      PartialOutResult r = partial_out(col, cov_data);
      for (std::size_t p : r.pruned) pruned_union.push_back(p);
      col = std::move(r.residuals);
    };
    residualize(z);
    residualize(x);
    residualize(y);
    std::sort(pruned_union.begin(), pruned_union.end());
    pruned_union.erase(std::unique(pruned_union.begin(), pruned_union.end()),
                       pruned_union.end());
    for (std::size_t p : pruned_union)
      out.provenance.pruned_covariates.push_back(cfg.covariates[p]);
  }

  // residualized columns binarize at their mean (zero) under the mean rule
  BinarizeRule rule = cfg.binarize;
  if (!cov_data.empty() && rule == BinarizeRule::None)
    raise(ErrorCode::BadConfig,
          "rule 'none' cannot follow partialling out; residuals are not 0/1");

  BinarizedColumn bz = binarize(z, rule);
  BinarizedColumn bx = binarize(x, rule);
  BinarizedColumn by = binarize(y, rule);
  out.provenance.binarize_rule = binarize_rule_name(rule);
  out.provenance.cutoffs[cfg.z_column] = bz.cutoff;
  out.provenance.cutoffs[cfg.x_column] = bx.cutoff;
  out.provenance.cutoffs[cfg.y_column] = by.cutoff;

  out.dataset.levels = Levels{2, 2, 2};
  out.dataset.dropped = dropped;
  out.dataset.rows.reserve(bz.values.size());
  for (std::size_t i = 0; i < bz.values.size(); ++i)
    out.dataset.rows.push_back(Obs{bz.values[i], bx.values[i], by.values[i]});
  return out;
}

}  // namespace

NpsDecision run_pipeline(const NumericTable& table, const PipelineConfig& cfg) {
  PreparedColumns prep = prepare(table, cfg);
  NpsDecision d = run_nps(prep.dataset, cfg);
  d.provenance.dropped_rows = prep.provenance.dropped_rows;
  d.provenance.cutoffs = prep.provenance.cutoffs;
  d.provenance.pruned_covariates = prep.provenance.pruned_covariates;
  d.provenance.binarize_rule = prep.provenance.binarize_rule;
  return d;
}

NpsDecision run_pipeline(const std::string& csv_path,
                         const PipelineConfig& cfg) {
  return run_pipeline(ingest_csv(csv_path, cfg.delimiter, cfg.missing), cfg);
}

namespace {

const char* method_name(EvidenceMethod m) {
  switch (m) {
    case EvidenceMethod::ClosedForm: return "closed_form";
    case EvidenceMethod::PriorMc: return "prior_mc";
    case EvidenceMethod::Ais: return "ais";
  }
  return "?";
}

ordered_json evidence_json(const LogEvidence& e) {
  ordered_json j;
  j["log_value"] = e.value;
  j["stderr"] = e.stderr_;
  j["method"] = method_name(e.method);
  j["samples"] = e.samples;
  return j;
}

ordered_json exact_report_json(const ExactTestReport& r) {
  ordered_json j;
  j["mode"] = r.mode == NecessaryMode::Pearl ? "pearl" : "monotonicity";
  j["alpha"] = r.alpha;
  j["per_test_level"] = r.per_test_level;
  j["correction"] = r.correction == Correction::Halved ? "halved" : "none";
  j["passed"] = r.passed;
  j["z_inverted"] = r.z_inverted;
  ordered_json tests = ordered_json::array();
  for (const auto& t : r.tests) {
    ordered_json tj;
    tj["id"] = t.id;
    tj["p_value"] = t.p_value;
    tj["degenerate"] = t.degenerate;
    tj["table"] = {t.table[0], t.table[1], t.table[2], t.table[3]};
    tests.push_back(tj);
  }
  j["inequalities"] = tests;
  return j;
}

ordered_json validity_report_json(const ValidityReport& r) {
  ordered_json j;
  ordered_json ev;
  if (r.valid_ok) ev["valid"] = evidence_json(r.valid);
  for (const auto& [cls, e] : r.invalid)
    ev[violation_class_name(cls)] = evidence_json(e);
  if (r.excl_full) ev["excl_full"] = evidence_json(*r.excl_full);
  j["evidences"] = ev;
  j["prior_ratio"] = r.prior_ratio;
  if (std::isnan(r.log_ratio))
    j["log_validity_ratio"] = nullptr;
  else
    j["log_validity_ratio"] = r.log_ratio;
  j["gamma"] = r.gamma;
  j["decision"] = ratio_decision_name(r.decision);
  if (!r.estimator_errors.empty()) j["errors"] = r.estimator_errors;
  return j;
}

ordered_json outcome_json(const TestOutcome& o) {
  ordered_json j;
  j["status"] = o.status == TestStatus::Pass
                    ? "pass"
                    : (o.status == TestStatus::Fail ? "fail" : "inconclusive");
  j["epsilon"] = o.epsilon;
  j["residual"] = o.residual;
  j["z_inverted"] = o.z_inverted;
  ordered_json v = ordered_json::array();
  for (const auto& viol : o.violations)
    v.push_back({{"id", viol.id}, {"lhs", viol.lhs}, {"rhs", viol.rhs}});
  j["violations"] = v;
  return j;
}

}  // namespace

std::string exact_report_to_json(const ExactTestReport& r) {
  return exact_report_json(r).dump(2);
}

std::string validity_report_to_json(const ValidityReport& r) {
  ordered_json j = validity_report_json(r);
  j["schema_version"] = 1;
  return j.dump(2);
}

std::string nps_decision_to_json(const NpsDecision& d) {
  ordered_json j;
  j["schema_version"] = 1;
  ordered_json nec;
  if (d.pearl) nec["pearl"] = exact_report_json(*d.pearl);
  if (d.monotonicity) nec["monotonicity"] = exact_report_json(*d.monotonicity);
  if (d.population) nec["population"] = outcome_json(*d.population);
  nec["passed"] = d.necessary_passed();
  j["necessary_test"] = nec;
  if (d.validity) {
    j["evidences"] = validity_report_json(*d.validity)["evidences"];
    if (std::isnan(d.validity->log_ratio))
      j["log_validity_ratio"] = nullptr;
    else
      j["log_validity_ratio"] = d.validity->log_ratio;
    if (!d.validity->estimator_errors.empty())
      j["estimator_errors"] = d.validity->estimator_errors;
  }
  j["decision"] = nps_final_name(d.decision);
  ordered_json prov;
  prov["seed"] = d.provenance.seed;
  prov["dropped_rows"] = d.provenance.dropped_rows;
  prov["binarize_rule"] = d.provenance.binarize_rule;
  prov["cutoffs"] = d.provenance.cutoffs;
  prov["pruned_covariates"] = d.provenance.pruned_covariates;
  prov["alpha"] = d.provenance.alpha;
  prov["gamma"] = d.provenance.gamma;
  prov["prior_ratio"] = d.provenance.prior_ratio;
  prov["monotonicity"] = d.provenance.monotonicity;
  prov["violations"] = d.provenance.violations;
  j["provenance"] = prov;
  return j.dump(2);
}

std::string power_curve_to_csv(const std::vector<PowerCurve>& curves) {
  std::ostringstream out;
  out << "config,strength_lo,strength_hi,models,passed,pass_fraction,"
         "mean_abs_wald_bias,wald_defined\n";
  for (const auto& c : curves) {
    for (const auto& b : c.bins) {
      out << c.descriptor << ',' << b.lo << ',' << b.hi << ',' << b.models
          << ',' << b.passed << ',' << b.pass_fraction() << ','
          << b.mean_abs_bias << ',' << b.wald_defined << '\n';
    }
  }
  return out.str();
}

std::string power_manifest_to_json(const std::vector<PowerConfig>& configs) {
  ordered_json j;
  j["schema_version"] = 1;
  ordered_json arr = ordered_json::array();
  for (const auto& c : configs) {
    ordered_json cj;
    cj["descriptor"] = c.descriptor;
    cj["class"] = violation_class_name(c.cls);
    cj["model_count"] = c.model_count;
    cj["bins"] = c.bins;
    cj["seed"] = c.seed;
    arr.push_back(cj);
  }
  j["configs"] = arr;
  return j.dump(2);
}

std::string grid_results_to_csv(const std::vector<GridResult>& results) {
  std::ostringstream out;
  out << "zx,xy,u,uz,zy,valid_instrument,size,dataset_seed,nec_pass,"
         "log_validity_ratio,valid_evidence,excl_evidence,air_evidence,"
         "both_evidence,error\n";
  for (const auto& r : results) {
    out << r.point.zx << ',' << r.point.xy << ',' << r.point.u << ','
        << r.point.uz << ',' << r.point.zy << ','
        << (r.point.valid_instrument() ? 1 : 0) << ',' << r.size << ','
        << r.dataset_seed << ',' << (r.nec_pass ? 1 : 0) << ',' << r.log_ratio
        << ',' << r.valid_evidence << ',' << r.excl_evidence << ','
        << r.air_evidence << ',' << r.both_evidence << ',' << r.error << '\n';
  }
  return out.str();
}

std::string grid_manifest_to_json(std::uint64_t size, double alpha,
                                  double gamma, std::uint64_t seed,
                                  const EvidenceConfig& cfg) {
  ordered_json j;
  j["schema_version"] = 1;
  j["size"] = size;
  j["alpha"] = alpha;
  j["gamma"] = gamma;
  j["seed"] = seed;
  j["ais"] = {{"rungs", cfg.ais.rungs},
              {"chains", cfg.ais.chains},
              {"moves", cfg.ais.moves},
              {"beta_min", cfg.ais.beta_min}};
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot open " + path);
  out << content;
  if (!out) raise(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace ivtest
