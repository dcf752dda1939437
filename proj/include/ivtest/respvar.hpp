#ifndef IVTEST_RESPVAR_HPP
#define IVTEST_RESPVAR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ivtest/core.hpp"
#include "ivtest/rng.hpp"

namespace ivtest {

enum class ViolationClass { Valid, Excl, Air, Both };

const char* violation_class_name(ViolationClass cls);
ViolationClass violation_class_from_name(const std::string& name);

// Enumerated deterministic response-function tables for one model class.
//
// Function tables are ordered lexicographically over their output tuples with
// the first domain point most significant. The treatment table maps z -> x
// (m^l functions). The outcome table maps x -> y (n^m functions) when the
// exclusion restriction holds, and (x, z) -> y with an x-major domain
// (n^(l*m) functions) when it is violated.
struct ResponseSpec {
  ViolationClass cls = ViolationClass::Valid;
  Levels levels;
  std::size_t rx_count = 0;
  std::size_t ry_count = 0;
  bool joint_layout = false;    // response probabilities carry r_z jointly
  bool y_depends_on_z = false;  // outcome functions take (x, z)

  std::vector<std::vector<int>> g_table;  // rx_count x l
  std::vector<std::vector<int>> y_table;  // ry_count x (m or m*l)

  // flat (rx, ry) indices mapping deterministically to each observed cell
  std::vector<std::vector<std::uint32_t>> cell_groups;

  std::size_t rxy_dim() const { return rx_count * ry_count; }
  std::size_t theta_dim() const {
    return joint_layout ? levels.z * rxy_dim() : levels.z + rxy_dim();
  }
  int y_value(std::size_t ry, int x, int z) const {
    return y_depends_on_z ? y_table[ry][static_cast<std::size_t>(x) * levels.z + z]
                          : y_table[ry][x];
  }
  // index of the constant function emitting the top outcome level
  std::size_t const_max_ry_index() const { return ry_count - 1; }
};

ResponseSpec build_spec(ViolationClass cls, const Levels& levels);

// One point in model space: a probability vector over response
// configurations, factorized as P(r_z) x P(r_x, r_y) for Valid/Excl or kept
// joint over (r_z, r_x, r_y) for Air/Both.
struct ThetaVector {
  ViolationClass cls = ViolationClass::Valid;
  std::vector<double> z_probs;   // factorized layouts, size l
  std::vector<double> response;  // rxy simplex, or l*rxy joint simplex
};

void validate_theta(const ThetaVector& theta, const ResponseSpec& spec,
                    double tol = 1e-9);

// Exact joint P(Z, X, Y) induced by theta (cells indexed by cell_index).
std::vector<double> forward_distribution(const ThetaVector& theta,
                                         const ResponseSpec& spec);

struct SamplingConstraint {
  enum class Kind {
    None,
    NondecreasingZY,    // outcome response nondecreasing in z
    NondecreasingZYXY,  // nondecreasing in both z and x
    MiThreshold,        // MI(R_Z; (R_X,R_Y)) >= threshold, in nats
    FixedConditional,   // P(r_y = index | r_z = 1) pinned to `value`
  };
  Kind kind = Kind::None;
  double alpha = 1.0;         // mass on the nondecreasing block, in [0.5, 1]
  double mi_threshold = 0.0;  // nats
  double value = 0.0;
  int ry_index = -1;  // FixedConditional target; -1 means the constant-max function
  bool monotone_treatment = false;  // restrict r_x to z-monotone functions
  int redraw_budget = 1000;

  static SamplingConstraint none() { return {}; }
  static SamplingConstraint nondecreasing_zy(double alpha);
  static SamplingConstraint nondecreasing_zy_xy(double alpha);
  static SamplingConstraint mi_threshold_nats(double tau);
  static SamplingConstraint fixed_conditional(double value, int ry_index = -1);
};

ThetaVector sample_model(const ResponseSpec& spec,
                         const SamplingConstraint& constraint, RngStream& rng);

struct NondecreasingSets {
  std::vector<std::uint32_t> in_z;  // outcome responses nondecreasing in z
  std::vector<std::uint32_t> in_x;  // outcome responses nondecreasing in x
};

// Requires an Excl or Both spec (outcome functions must take z).
NondecreasingSets classify_nondecreasing(const ResponseSpec& spec);

// Treatment responses whose function is nondecreasing in z (no defiers).
std::vector<std::uint32_t> monotone_rx_indices(const ResponseSpec& spec);

// MI(R_Z; (R_X, R_Y)) in nats; requires a joint layout.
double mutual_information(const ThetaVector& theta, const ResponseSpec& spec);

Dataset sample_dataset(const ThetaVector& theta, const ResponseSpec& spec,
                       std::uint64_t size, RngStream& rng);

// i.i.d. draws from an explicit joint cell distribution
Dataset sample_dataset_from_cells(const std::vector<double>& cells,
                                  const Levels& levels, std::uint64_t size,
                                  RngStream& rng);

// JSON layouts for experiment provenance.
std::string response_spec_to_json(const ResponseSpec& spec);
std::string theta_to_json(const ThetaVector& theta);
ThetaVector theta_from_json(const std::string& text);

}  // namespace ivtest

#endif
