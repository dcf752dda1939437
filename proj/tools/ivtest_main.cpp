// Command-line front end: necessary tests, validity ratios, the full
// decision pipeline, and the simulation experiments.

#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivtest/core.hpp"
#include "ivtest/mlik.hpp"
#include "ivtest/nectest.hpp"
#include "ivtest/pipeline.hpp"
#include "ivtest/respvar.hpp"
#include "ivtest/simlab.hpp"

namespace {

using namespace ivtest;

struct CommonOpts {
  std::string input;
  std::string columns = "z,x,y";
  std::string covariates;
  std::string binarize = "mean";
  std::string violations = "excl,air,both";
  std::string out;
  std::string format = "json";
  double alpha = 0.05;
  double gamma = 10.0;
  double prior_ratio = 1.0;
  std::uint64_t seed = 1;
  int mc_chains = 256;
  int ais_rungs = 64;
  int ais_moves = 5;
  double ais_beta_min = 1e-4;
  bool monotonicity = false;
  bool strict = false;
  std::string delimiter = ",";
};

void add_data_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--input", o.input, "input CSV path")->required();
  cmd->add_option("--columns", o.columns, "z,x,y column names");
  cmd->add_option("--covariates", o.covariates, "comma-separated covariate columns");
  cmd->add_option("--binarize", o.binarize, "mean|median|none");
  cmd->add_option("--delimiter", o.delimiter, "field delimiter");
  cmd->add_flag("--strict", o.strict, "error on missing values instead of dropping");
}

void add_test_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--alpha", o.alpha, "significance level for the exact test");
  cmd->add_flag("--mono", o.monotonicity, "also test the monotonicity inequalities");
}

void add_ratio_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--gamma", o.gamma, "acceptance threshold (> 1)");
  cmd->add_option("--violations", o.violations, "subset of excl,air,both");
  cmd->add_option("--prior-ratio", o.prior_ratio, "P(valid)/P(invalid) prior ratio");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--mc-chains", o.mc_chains, "AIS chain count");
  cmd->add_option("--ais-rungs", o.ais_rungs, "AIS ladder size");
  cmd->add_option("--ais-moves", o.ais_moves, "within-rung moves");
  cmd->add_option("--ais-beta-min", o.ais_beta_min, "first ladder temperature");
}

void add_output_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--out", o.out, "output path (stdout when omitted)");
  cmd->add_option("--format", o.format, "json|csv");
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::set<ViolationClass> parse_violations(const std::string& s) {
  std::set<ViolationClass> out;
  for (const auto& name : split_csv_list(s))
    out.insert(violation_class_from_name(name));
  return out;
}

PipelineConfig make_config(const CommonOpts& o, bool with_ratio) {
  PipelineConfig cfg;
  std::vector<std::string> cols = split_csv_list(o.columns);
  if (cols.size() != 3)
    raise(ErrorCode::BadConfig, "--columns needs exactly z,x,y");
  cfg.z_column = cols[0];
  cfg.x_column = cols[1];
  cfg.y_column = cols[2];
  cfg.covariates = split_csv_list(o.covariates);
  cfg.binarize = binarize_rule_from_name(o.binarize);
  cfg.missing = o.strict ? MissingPolicy::Strict : MissingPolicy::Lenient;
  if (o.delimiter.size() != 1)
    raise(ErrorCode::BadConfig, "--delimiter must be one character");
  cfg.delimiter = o.delimiter[0];
  cfg.alpha = o.alpha;
  cfg.monotonicity = o.monotonicity;
  cfg.compute_ratio = with_ratio;
  cfg.gamma = o.gamma;
  cfg.violations = parse_violations(o.violations);
  cfg.prior_ratio = o.prior_ratio;
  cfg.seed = o.seed;
  cfg.evidence.seed = o.seed;
  cfg.evidence.ais.chains = o.mc_chains;
  cfg.evidence.ais.rungs = o.ais_rungs;
  cfg.evidence.ais.moves = o.ais_moves;
  cfg.evidence.ais.beta_min = o.ais_beta_min;
  return cfg;
}

void emit(const CommonOpts& o, const std::string& content) {
  if (o.out.empty())
    std::cout << content << std::endl;
  else
    write_text_file(o.out, content);
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::EstimatorDiverged:
      return 3;
    default:
      return 2;
  }
}

int cmd_nectest(const CommonOpts& o) {
  PipelineConfig cfg = make_config(o, false);
  NpsDecision d = run_pipeline(o.input, cfg);
  std::string body;
  if (d.pearl && !d.monotonicity) {
    body = exact_report_to_json(*d.pearl);
  } else {
    body = nps_decision_to_json(d);
  }
  emit(o, body);
  return 0;
}

int cmd_ratio(const CommonOpts& o) {
  PipelineConfig cfg = make_config(o, true);
  NpsDecision d = run_pipeline(o.input, cfg);
  if (d.validity) {
    emit(o, validity_report_to_json(*d.validity));
    return d.validity->estimator_errors.empty() ? 0 : 3;
  }
  // necessary test rejected before any evidence was computed
  emit(o, nps_decision_to_json(d));
  return 0;
}

int cmd_nps(const CommonOpts& o) {
  PipelineConfig cfg = make_config(o, true);
  NpsDecision d = run_pipeline(o.input, cfg);
  emit(o, nps_decision_to_json(d));
  return 0;
}

EvidenceConfig sim_evidence_config(const CommonOpts& o, std::uint64_t n) {
  EvidenceConfig cfg;
  cfg.seed = o.seed;
  cfg.ais.chains = o.mc_chains;
  cfg.ais.rungs = o.ais_rungs;
  cfg.ais.moves = o.ais_moves;
  // with thousands of observations the prior-to-posterior path needs to
  // start colder than the small-sample default
  cfg.ais.beta_min = std::min(o.ais_beta_min, 0.1 / static_cast<double>(n));
  return cfg;
}

int cmd_sim_power(const CommonOpts& o, const std::string& cls,
                  const std::string& constraint_name, double alpha_frac,
                  int models) {
  PowerConfig cfg;
  cfg.cls = violation_class_from_name(cls);
  cfg.model_count = models;
  cfg.seed = o.seed;
  if (constraint_name == "none") {
    cfg.constraint = SamplingConstraint::none();
  } else if (constraint_name == "ndzy") {
    cfg.constraint = SamplingConstraint::nondecreasing_zy(alpha_frac);
  } else if (constraint_name == "ndzyxy") {
    cfg.constraint = SamplingConstraint::nondecreasing_zy_xy(alpha_frac);
  } else {
    raise(ErrorCode::BadConfig, "unknown constraint '" + constraint_name + "'");
  }
  cfg.constraint.monotone_treatment = true;
  std::ostringstream desc;
  desc << cls << "-" << constraint_name;
  if (constraint_name != "none") desc << "-a" << alpha_frac;
  cfg.descriptor = desc.str();

  PowerCurve curve = run_power_experiment(cfg);
  if (o.format == "csv")
    emit(o, power_curve_to_csv({curve}));
  else
    emit(o, power_manifest_to_json({cfg}) + "\n" + power_curve_to_csv({curve}));
  return 0;
}

int cmd_sim_grid(const CommonOpts& o, std::uint64_t size, bool full) {
  std::vector<GridPoint> grid = full ? full_grid() : default_grid_subset();
  EvidenceConfig cfg = sim_evidence_config(o, size);
  std::vector<GridResult> results =
      run_grid_experiment(grid, size, o.alpha, o.gamma, cfg, o.seed);
  if (o.format == "json")
    emit(o, grid_manifest_to_json(size, o.alpha, o.gamma, o.seed, cfg) + "\n" +
                grid_results_to_csv(results));
  else
    emit(o, grid_results_to_csv(results));
  return 0;
}

int cmd_sim_palmer(const CommonOpts& o, std::uint64_t size) {
  EvidenceConfig cfg = sim_evidence_config(o, size);
  std::set<ViolationClass> violations = parse_violations(o.violations);

  std::ostringstream out;
  out << "dataset,log_excl,log_air,log_valid,log_validity_ratio,ratio,decision\n";
  std::vector<PalmerModel> models = palmer_models();
  for (std::size_t i = 0; i < models.size(); ++i) {
    RngStream rng = substream(o.seed, i);
    Dataset d = sample_dataset(models[i].theta, models[i].spec, size, rng);
    ContingencyTable t = build_contingency(d);
    EvidenceConfig mcfg = cfg;
    mcfg.seed = stream_seed(o.seed, 100 + i);
    ValidityReport rep =
        validity_ratio(t, violations, o.prior_ratio, o.gamma, mcfg);
    auto log_of = [&](ViolationClass c) {
      return rep.invalid.count(c) ? rep.invalid.at(c).value : 0.0;
    };
    out << models[i].name << ',' << log_of(ViolationClass::Excl) << ','
        << log_of(ViolationClass::Air) << ',' << rep.valid.value << ','
        << rep.log_ratio << ',' << std::exp(rep.log_ratio) << ','
        << ratio_decision_name(rep.decision) << '\n';
  }
  emit(o, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instrumental-variable validity testing toolkit"};
  app.require_subcommand(1);

  CommonOpts o;

  CLI::App* nectest_cmd =
      app.add_subcommand("nectest", "finite-sample necessary test on a CSV");
  add_data_options(nectest_cmd, o);
  add_test_options(nectest_cmd, o);
  add_output_options(nectest_cmd, o);

  CLI::App* ratio_cmd =
      app.add_subcommand("ratio", "validity ratio for a CSV dataset");
  add_data_options(ratio_cmd, o);
  add_test_options(ratio_cmd, o);
  add_ratio_options(ratio_cmd, o);
  add_output_options(ratio_cmd, o);

  CLI::App* nps_cmd =
      app.add_subcommand("nps", "full decision pipeline on a CSV");
  add_data_options(nps_cmd, o);
  add_test_options(nps_cmd, o);
  add_ratio_options(nps_cmd, o);
  add_output_options(nps_cmd, o);

  CLI::App* sim = app.add_subcommand("simulate", "simulation experiments");
  sim->require_subcommand(1);

  std::string power_class = "excl";
  std::string power_constraint = "ndzy";
  double power_alpha_frac = 1.0;
  int power_models = 200;
  CLI::App* power_cmd = sim->add_subcommand("power", "necessary-test power study");
  power_cmd->add_option("--class", power_class, "excl|air|both");
  power_cmd->add_option("--constraint", power_constraint, "none|ndzy|ndzyxy");
  power_cmd->add_option("--alpha-frac", power_alpha_frac,
                        "mass on the nondecreasing block, in [0.5, 1]");
  power_cmd->add_option("--models", power_models, "sampled models");
  power_cmd->add_option("--seed", o.seed, "random seed");
  add_output_options(power_cmd, o);

  std::uint64_t grid_size = 50000;
  bool grid_full = false;
  CLI::App* grid_cmd = sim->add_subcommand("grid", "parametric binary model grid");
  grid_cmd->add_option("--size", grid_size, "dataset size per grid point");
  grid_cmd->add_flag("--full", grid_full, "run the full 1600-point grid");
  grid_cmd->add_option("--alpha", o.alpha, "exact-test level");
  grid_cmd->add_option("--gamma", o.gamma, "decision threshold");
  grid_cmd->add_option("--seed", o.seed, "random seed");
  grid_cmd->add_option("--mc-chains", o.mc_chains, "AIS chain count");
  grid_cmd->add_option("--ais-rungs", o.ais_rungs, "AIS ladder size");
  add_output_options(grid_cmd, o);

  std::uint64_t palmer_size = 2000;
  CLI::App* palmer_cmd =
      sim->add_subcommand("palmer", "open-problem candidate outcomes");
  palmer_cmd->add_option("--size", palmer_size, "dataset size per model");
  palmer_cmd->add_option("--gamma", o.gamma, "decision threshold");
  palmer_cmd->add_option("--seed", o.seed, "random seed");
  palmer_cmd->add_option("--violations", o.violations, "subset of excl,air,both")
      ->default_val("excl,air");
  palmer_cmd->add_option("--prior-ratio", o.prior_ratio, "prior ratio");
  palmer_cmd->add_option("--mc-chains", o.mc_chains, "AIS chain count");
  palmer_cmd->add_option("--ais-rungs", o.ais_rungs, "AIS ladder size");
  add_output_options(palmer_cmd, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (nectest_cmd->parsed()) return cmd_nectest(o);
    if (ratio_cmd->parsed()) return cmd_ratio(o);
    if (nps_cmd->parsed()) return cmd_nps(o);
    if (sim->parsed()) {
      if (power_cmd->parsed())
        return cmd_sim_power(o, power_class, power_constraint,
                             power_alpha_frac, power_models);
      if (grid_cmd->parsed()) return cmd_sim_grid(o, grid_size, grid_full);
      if (palmer_cmd->parsed()) return cmd_sim_palmer(o, palmer_size);
    }
  } catch (const ivtest::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
