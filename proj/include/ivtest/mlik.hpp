#ifndef IVTEST_MLIK_HPP
#define IVTEST_MLIK_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ivtest/core.hpp"
#include "ivtest/respvar.hpp"

namespace ivtest {

enum class EvidenceMethod { ClosedForm, PriorMc, Ais };

struct LogEvidence {
  double value = 0.0;
  double stderr_ = 0.0;  // 0 for closed forms
  EvidenceMethod method = EvidenceMethod::ClosedForm;
  std::uint64_t samples = 0;
};

struct AisConfig {
  int rungs = 64;           // nonzero inverse temperatures on the ladder
  int chains = 256;
  int moves = 5;            // within-rung random-walk updates
  double beta_min = 1e-4;   // first rung of the geometric ladder
  double ess_floor = 5.0;
  int pilot_chains = 8;     // step-size calibration pass; 0 disables
  double initial_step = 0.5;
};

struct EvidenceConfig {
  EvidenceMethod method = EvidenceMethod::Ais;
  AisConfig ais;
  std::uint64_t prior_mc_samples = 200000;
  std::uint64_t seed = 0;
  bool excl_include_full = false;  // also integrate the unrestricted space

  // Optional two-stage exclusion maximization: screen every submodel with a
  // light ladder, then re-estimate those within `excl_screen_margin` nats of
  // the screen max at full quality.
  std::optional<AisConfig> excl_screen;
  double excl_screen_margin = 15.0;
};

// Log integrand over a probability simplex: sum_j Q_j * log(sum of a
// component group). This is the conditional response factor of the model
// evidence with the closed-form pieces stripped off.
struct GroupedIntegrand {
  std::size_t dim = 0;
  std::vector<std::vector<std::uint32_t>> groups;  // cells with Q_j > 0
  std::vector<double> counts;

  double operator()(const double* theta) const;
  double operator()(const std::vector<double>& theta) const {
    return (*this)(theta.data());
  }
};

using LogIntegrand = std::function<double(const double*)>;

// the response-factor integrand of a factorized evidence
GroupedIntegrand conditional_integrand(const ResponseSpec& spec,
                                       const ContingencyTable& t);

// closed-form instrument factor shared by ml_valid and ml_excl:
// log Gamma(l)/Gamma(l+N) + sum_z log Gamma(1+N_z)
double log_instrument_evidence(const ContingencyTable& t);

// sum_j Q_j log P(cell_j | theta); -inf when an observed cell has zero mass
double log_likelihood(const ThetaVector& theta, const ContingencyTable& t,
                      const ResponseSpec& spec);

// Closed-form evidences (Dirichlet aggregation over disjoint preimages).
LogEvidence ml_air(const ContingencyTable& t);
LogEvidence ml_both(const ContingencyTable& t);

// Evidence under the valid-model class: closed-form instrument factor times
// the hyperdirichlet response integral estimated per config.
LogEvidence ml_valid(const ContingencyTable& t, const EvidenceConfig& cfg);

struct ExclEvidence {
  LogEvidence best;                    // what ml_excl reports
  std::vector<LogEvidence> submodels;  // one per exclusion-violating outcome fn
  std::optional<LogEvidence> full;     // unrestricted integral, if requested
};

// Evidence under exclusion violation: by default the max over the restricted
// submodels that keep the exclusion-respecting outcome functions plus exactly
// one violating one.
LogEvidence ml_excl(const ContingencyTable& t, const EvidenceConfig& cfg);
ExclEvidence ml_excl_detail(const ContingencyTable& t, const EvidenceConfig& cfg);

// Annealed importance sampling from the uniform simplex prior to
// prior x integrand along a geometric inverse-temperature ladder.
// coordinate_counts, when given, precondition the within-rung kernel
// (random-walk scales plus Dirichlet independence refreshes).
LogEvidence ais_hyperdirichlet(const LogIntegrand& log_integrand,
                               std::size_t dim, const AisConfig& cfg,
                               std::uint64_t seed,
                               const std::vector<double>& coordinate_counts = {});

// Grouped-integrand overload: fits a mean-field Dirichlet surrogate per rung
// (self-consistent split of the tempered cell counts), which drives both the
// random-walk scales and the independence refreshes.
LogEvidence ais_hyperdirichlet(const GroupedIntegrand& integrand,
                               const AisConfig& cfg, std::uint64_t seed);

// Brute-force prior average; the validation oracle.
LogEvidence prior_mc(const LogIntegrand& log_integrand, std::size_t dim,
                     std::uint64_t samples, std::uint64_t seed);

enum class RatioDecision { Accept, Reject, Inconclusive };
const char* ratio_decision_name(RatioDecision d);

struct ValidityReport {
  LogEvidence valid;
  bool valid_ok = false;
  std::map<ViolationClass, LogEvidence> invalid;  // requested classes
  std::optional<LogEvidence> excl_full;
  std::vector<std::string> estimator_errors;
  double prior_ratio = 1.0;
  double log_prior_ratio = 0.0;
  double log_ratio = 0.0;  // NaN when not computable
  double gamma = 0.0;
  RatioDecision decision = RatioDecision::Inconclusive;
};

// log ratio = ml_valid - max(requested invalid evidences) + log prior_ratio;
// ACCEPT above log(gamma), REJECT below -log(gamma).
ValidityReport validity_ratio(const ContingencyTable& t,
                              const std::set<ViolationClass>& violations,
                              double prior_ratio, double gamma,
                              const EvidenceConfig& cfg);

// number of evidence computations since process start (test instrumentation)
std::uint64_t evidence_eval_count();

}  // namespace ivtest

#endif
