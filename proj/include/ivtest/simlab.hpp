#ifndef IVTEST_SIMLAB_HPP
#define IVTEST_SIMLAB_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ivtest/core.hpp"
#include "ivtest/mlik.hpp"
#include "ivtest/nectest.hpp"
#include "ivtest/respvar.hpp"

namespace ivtest {

struct WaldEstimate {
  double value = 0.0;
  bool defined = false;  // false when the first stage is zero
};

// (P(Y=1|Z=1) - P(Y=1|Z=0)) / (P(X=1|Z=1) - P(X=1|Z=0)), clipped to [-1, 1].
WaldEstimate wald_estimate(const CondProbVector& f);

// P(X=1|Z=1) - P(X=1|Z=0) for binary data.
double binary_instrument_strength(const CondProbVector& f);

struct TrueBias {
  double value = 0.0;
  bool defined = false;
};

// Wald estimate minus the interventional contrast
// E[Y|do(X=1)] - E[Y|do(X=0)] implied by theta (binary data). When the
// outcome depends on z directly, the contrast is taken at the model's
// marginal instrument distribution.
TrueBias true_bias(const ThetaVector& theta, const ResponseSpec& spec);
double average_causal_effect(const ThetaVector& theta, const ResponseSpec& spec);

struct PowerConfig {
  std::string descriptor;
  ViolationClass cls = ViolationClass::Excl;
  SamplingConstraint constraint;
  int model_count = 200;
  int bins = 10;
  std::uint64_t seed = 1;
};

struct PowerBin {
  double lo = 0.0, hi = 0.0;
  int models = 0;
  int passed = 0;  // population Pearl + monotonicity test passed
  int wald_defined = 0;
  double mean_abs_bias = 0.0;

  double pass_fraction() const {
    return models > 0 ? static_cast<double>(passed) / models : 0.0;
  }
};

struct PowerCurve {
  std::string descriptor;
  std::vector<PowerBin> bins;
  int model_count = 0;
  int passed_total = 0;
};

// Samples invalid models, computes each model's exact conditional
// distribution, applies the population necessary test (instrumental
// inequalities plus monotonicity), and bins pass fractions and Wald bias by
// instrument strength.
PowerCurve run_power_experiment(const PowerConfig& cfg);

// Bernoulli structural family behind the observational-model grid:
//   Z ~ Bern(pz + uz*U), X ~ Bern(bx + zx*Z + ux*U),
//   Y ~ Bern(by + zy*Z + xy*X + uy*U), U ~ Bern(0.5).
struct BernoulliIvModel {
  double pz = 0.5;
  double uz = 0.0;
  double bx = 0.05;
  double zx = 0.1;
  double ux = 0.1;
  double by = 0.1;
  double zy = 0.0;
  double xy = 0.05;
  double uy = 0.1;

  bool valid_instrument() const { return uz == 0.0 && zy == 0.0; }
};

// Exact joint cell probabilities by enumeration over (Z, U); throws
// InvalidProbability when a Bernoulli rate leaves [0, 1].
std::vector<double> model_cell_probabilities(const BernoulliIvModel& m);

// Response-variable encoding of a model with uz == 0 (Valid when zy == 0,
// Excl otherwise).
struct EncodedModel {
  ResponseSpec spec;
  ThetaVector theta;
};
EncodedModel encode_bernoulli_model(const BernoulliIvModel& m);

// Probability split over the 2^K threshold response functions 1{v <= t[k]}
// induced by v ~ U(0,1); index is MSB-first over domain points.
std::vector<double> threshold_function_probs(const std::vector<double>& t);

struct PalmerModel {
  std::string name;  // D0, D1, D2
  BernoulliIvModel model;
  ResponseSpec spec;
  ThetaVector theta;
};

// The three candidate-outcome models of the binary open problem; the direct
// z->y coefficients are 0, 0.2 and 0.05.
std::vector<PalmerModel> palmer_models();

struct GridPoint {
  double zx = 0.1;
  double xy = 0.1;
  double u = 0.0;  // shared value of ux and uy
  double uz = 0.0;
  double zy = 0.0;

  bool valid_instrument() const { return uz == 0.0 && zy == 0.0; }
  BernoulliIvModel model() const;
};

// Full 5x5x4x4x4 parameter grid, invalid-probability tuples removed.
std::vector<GridPoint> full_grid();

// 40-point desk-scale subgrid: 20 valid-instrument tuples spanning all zx
// levels plus 20 weak-instrument exclusion violations (zx in {0.1, 0.3},
// zy >= 0.3, uz = 0).
std::vector<GridPoint> default_grid_subset();

struct GridResult {
  GridPoint point;
  std::uint64_t dataset_seed = 0;
  std::uint64_t size = 0;
  bool nec_pass = false;  // finite-sample instrumental-inequality test
  double log_ratio = 0.0;
  double valid_evidence = 0.0;
  double excl_evidence = 0.0;
  double air_evidence = 0.0;
  double both_evidence = 0.0;
  std::string error;
};

std::vector<GridResult> run_grid_experiment(const std::vector<GridPoint>& grid,
                                            std::uint64_t size, double alpha,
                                            double gamma,
                                            const EvidenceConfig& cfg,
                                            std::uint64_t seed);

}  // namespace ivtest

#endif
