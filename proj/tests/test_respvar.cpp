#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ivtest/nectest.hpp"
#include "ivtest/respvar.hpp"
#include "ivtest/rng.hpp"

using namespace ivtest;

namespace {
const Levels kBinary{2, 2, 2};
}

TEST_CASE("build_spec dimensions for the binary classes") {
  ResponseSpec valid = build_spec(ViolationClass::Valid, kBinary);
  CHECK(valid.rx_count == 4);
  CHECK(valid.ry_count == 4);
  CHECK(valid.theta_dim() == 18);  // 2 + 4*4
  CHECK_FALSE(valid.joint_layout);

  ResponseSpec excl = build_spec(ViolationClass::Excl, kBinary);
  CHECK(excl.ry_count == 16);
  CHECK(excl.theta_dim() == 66);  // 2 + 4*16
  CHECK_FALSE(excl.joint_layout);
  CHECK(excl.y_depends_on_z);

  ResponseSpec air = build_spec(ViolationClass::Air, kBinary);
  CHECK(air.theta_dim() == 32);  // 2*4*4
  CHECK(air.joint_layout);

  ResponseSpec both = build_spec(ViolationClass::Both, kBinary);
  CHECK(both.theta_dim() == 128);  // 2*4*16
  CHECK(both.joint_layout);
  CHECK(both.y_depends_on_z);
}

TEST_CASE("treatment table uses the canonical function order") {
  ResponseSpec spec = build_spec(ViolationClass::Valid, kBinary);
  // constant-0, identity, negation, constant-1
  CHECK(spec.g_table[0] == std::vector<int>{0, 0});
  CHECK(spec.g_table[1] == std::vector<int>{0, 1});
  CHECK(spec.g_table[2] == std::vector<int>{1, 0});
  CHECK(spec.g_table[3] == std::vector<int>{1, 1});
  CHECK(spec.y_table[1] == std::vector<int>{0, 1});
  CHECK(spec.const_max_ry_index() == 3);
}

TEST_CASE("monotone treatment responses exclude the defier") {
  ResponseSpec spec = build_spec(ViolationClass::Valid, kBinary);
  CHECK(monotone_rx_indices(spec) == std::vector<std::uint32_t>{0, 1, 3});
}

TEST_CASE("preimage partition covers the whole configuration space") {
  for (auto cls : {ViolationClass::Air, ViolationClass::Both}) {
    ResponseSpec spec = build_spec(cls, kBinary);
    std::size_t total = 0;
    for (const auto& g : spec.cell_groups) total += g.size();
    CHECK(total == spec.levels.z * spec.rxy_dim());
    CHECK(total == (cls == ViolationClass::Air ? 32 : 128));
  }
}

TEST_CASE("forward distribution of a point-mass model") {
  ResponseSpec spec = build_spec(ViolationClass::Valid, kBinary);
  ThetaVector theta;
  theta.cls = ViolationClass::Valid;
  theta.z_probs = {1.0, 0.0};
  theta.response.assign(16, 0.0);
  theta.response[3 * 4 + 1] = 1.0;  // r_x const-1, r_y identity
  std::vector<double> cells = forward_distribution(theta, spec);
  CHECK(cells[cell_index(kBinary, 0, 1, 1)] == doctest::Approx(1.0));
  double total = std::accumulate(cells.begin(), cells.end(), 0.0);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("uniform joint theta spreads mass evenly over cells") {
  ResponseSpec spec = build_spec(ViolationClass::Air, kBinary);
  ThetaVector theta;
  theta.cls = ViolationClass::Air;
  theta.response.assign(32, 1.0 / 32.0);
  std::vector<double> cells = forward_distribution(theta, spec);
  for (double c : cells) CHECK(c == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("forward distribution rejects mismatched layouts") {
  ResponseSpec spec = build_spec(ViolationClass::Valid, kBinary);
  ThetaVector theta;
  theta.cls = ViolationClass::Air;
  theta.response.assign(32, 1.0 / 32.0);
  CHECK_THROWS_AS(forward_distribution(theta, spec), Error);
}

TEST_CASE("forward distribution sums to one for sampled models") {
  for (auto cls : {ViolationClass::Valid, ViolationClass::Excl,
                   ViolationClass::Air, ViolationClass::Both}) {
    ResponseSpec spec = build_spec(cls, kBinary);
    for (int i = 0; i < 30; ++i) {
      RngStream rng = substream(91, 1000 * static_cast<int>(cls) + i);
      ThetaVector theta = sample_model(spec, SamplingConstraint::none(), rng);
      std::vector<double> cells = forward_distribution(theta, spec);
      double total = std::accumulate(cells.begin(), cells.end(), 0.0);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("classify_nondecreasing finds the known binary counts") {
  ResponseSpec spec = build_spec(ViolationClass::Excl, kBinary);
  NondecreasingSets sets = classify_nondecreasing(spec);
  CHECK(sets.in_z.size() == 9);
  CHECK(sets.in_x.size() == 9);
  std::vector<std::uint32_t> both;
  std::set_intersection(sets.in_z.begin(), sets.in_z.end(), sets.in_x.begin(),
                        sets.in_x.end(), std::back_inserter(both));
  CHECK(both.size() == 6);
  // constant functions sit in both sets
  for (auto idx : {0u, 15u}) {
    CHECK(std::count(sets.in_z.begin(), sets.in_z.end(), idx) == 1);
    CHECK(std::count(sets.in_x.begin(), sets.in_x.end(), idx) == 1);
  }
  ResponseSpec valid = build_spec(ViolationClass::Valid, kBinary);
  CHECK_THROWS_AS(classify_nondecreasing(valid), Error);
}

TEST_CASE("strict nondecreasing constraint confines outcome mass") {
  ResponseSpec spec = build_spec(ViolationClass::Excl, kBinary);
  NondecreasingSets sets = classify_nondecreasing(spec);
  std::vector<bool> in_z(spec.ry_count, false);
  for (auto ry : sets.in_z) in_z[ry] = true;

  RngStream rng(17);
  ThetaVector theta =
      sample_model(spec, SamplingConstraint::nondecreasing_zy(1.0), rng);
  double off_mass = 0.0, on_mass = 0.0;
  for (std::size_t i = 0; i < theta.response.size(); ++i) {
    if (in_z[i % spec.ry_count])
      on_mass += theta.response[i];
    else
      off_mass += theta.response[i];
  }
  CHECK(off_mass == 0.0);
  CHECK(on_mass == doctest::Approx(1.0));
}

TEST_CASE("relaxed nondecreasing constraint splits mass by alpha") {
  ResponseSpec spec = build_spec(ViolationClass::Excl, kBinary);
  NondecreasingSets sets = classify_nondecreasing(spec);
  std::vector<bool> in_z(spec.ry_count, false);
  for (auto ry : sets.in_z) in_z[ry] = true;

  RngStream rng(18);
  ThetaVector theta =
      sample_model(spec, SamplingConstraint::nondecreasing_zy(0.8), rng);
  double on_mass = 0.0;
  for (std::size_t i = 0; i < theta.response.size(); ++i)
    if (in_z[i % spec.ry_count]) on_mass += theta.response[i];
  CHECK(on_mass == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("alpha outside [0.5, 1] is rejected") {
  ResponseSpec spec = build_spec(ViolationClass::Excl, kBinary);
  RngStream rng(19);
  CHECK_THROWS_AS(
      sample_model(spec, SamplingConstraint::nondecreasing_zy(0.3), rng),
      Error);
}

TEST_CASE("fixed conditional pins the requested probability") {
  ResponseSpec spec = build_spec(ViolationClass::Air, kBinary);
  RngStream rng(21);
  ThetaVector theta =
      sample_model(spec, SamplingConstraint::fixed_conditional(0.9, 3), rng);
  const std::size_t rxy = spec.rxy_dim();
  double stratum = 0.0, hit = 0.0;
  for (std::size_t w = 0; w < rxy; ++w) {
    double p = theta.response[rxy + w];
    stratum += p;
    if (w % spec.ry_count == 3) hit += p;
  }
  CHECK(hit / stratum == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("mutual information is zero exactly for factorized joints") {
  ResponseSpec spec = build_spec(ViolationClass::Air, kBinary);
  ThetaVector theta;
  theta.cls = ViolationClass::Air;
  theta.response.assign(32, 0.0);
  // product of (0.3, 0.7) with a random-ish 16-vector
  std::vector<double> w(16);
  for (int i = 0; i < 16; ++i) w[i] = (i + 1);
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (int i = 0; i < 16; ++i) {
    theta.response[i] = 0.3 * w[i] / total;
    theta.response[16 + i] = 0.7 * w[i] / total;
  }
  CHECK(mutual_information(theta, spec) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mutual information reaches ln 2 for a perfect coupling") {
  ResponseSpec spec = build_spec(ViolationClass::Air, kBinary);
  ThetaVector theta;
  theta.cls = ViolationClass::Air;
  theta.response.assign(32, 0.0);
  theta.response[0] = 0.5;       // (r_z=0, w=0)
  theta.response[16 + 5] = 0.5;  // (r_z=1, w=5)
  CHECK(mutual_information(theta, spec) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("conditional knob raises mutual information above baseline") {
  ResponseSpec spec = build_spec(ViolationClass::Air, kBinary);
  RngStream rng(23);
  ThetaVector skew =
      sample_model(spec, SamplingConstraint::fixed_conditional(0.9, 3), rng);
  CHECK(mutual_information(skew, spec) > 0.05);
}

TEST_CASE("achievable MI thresholds are met; impossible ones error out") {
  ResponseSpec spec = build_spec(ViolationClass::Air, kBinary);
  RngStream rng(25);
  ThetaVector theta =
      sample_model(spec, SamplingConstraint::mi_threshold_nats(0.4), rng);
  CHECK(mutual_information(theta, spec) >= 0.4);

  // MI with a binary instrument response cannot exceed ln 2 = 0.693 nats
  RngStream rng2(26);
  SamplingConstraint hard = SamplingConstraint::mi_threshold_nats(0.75);
  hard.redraw_budget = 50;
  CHECK_THROWS_AS(sample_model(spec, hard, rng2), Error);
}

TEST_CASE("joint samples are never exactly independent") {
  ResponseSpec spec = build_spec(ViolationClass::Air, kBinary);
  RngStream rng(27);
  ThetaVector theta = sample_model(spec, SamplingConstraint::none(), rng);
  CHECK(mutual_information(theta, spec) > 0.0);
}

TEST_CASE("valid models always pass the population membership test") {
  ResponseSpec spec = build_spec(ViolationClass::Valid, kBinary);
  VertexSet v = enumerate_valid_iv_vertices(kBinary);
  for (int i = 0; i < 100; ++i) {
    RngStream rng = substream(31, i);
    ThetaVector theta = sample_model(spec, SamplingConstraint::none(), rng);
    CondProbVector f =
        cond_prob_from_joint(forward_distribution(theta, spec), kBinary);
    CHECK(pearl_binary_test(f, 1e-9).passed());
    CHECK(polytope_membership(f, v, 1e-7).passed());
  }
}

TEST_CASE("defier-free valid models pass the monotonicity test") {
  ResponseSpec spec = build_spec(ViolationClass::Valid, kBinary);
  SamplingConstraint c = SamplingConstraint::none();
  c.monotone_treatment = true;
  for (int i = 0; i < 100; ++i) {
    RngStream rng = substream(33, i);
    ThetaVector theta = sample_model(spec, c, rng);
    // defier components carry no mass
    CHECK(theta.response[2 * 4 + 0] == 0.0);
    CondProbVector f =
        cond_prob_from_joint(forward_distribution(theta, spec), kBinary);
    CHECK(monotonicity_test(f, 1e-9).passed());
  }
}

TEST_CASE("point-mass models sample constant datasets") {
  ResponseSpec spec = build_spec(ViolationClass::Valid, kBinary);
  ThetaVector theta;
  theta.cls = ViolationClass::Valid;
  theta.z_probs = {0.0, 1.0};
  theta.response.assign(16, 0.0);
  theta.response[1 * 4 + 1] = 1.0;  // complier, identity outcome
  RngStream rng(41);
  Dataset d = sample_dataset(theta, spec, 50, rng);
  for (const Obs& o : d.rows) CHECK(o == Obs{1, 1, 1});
}

TEST_CASE("uniform-cell sampling concentrates near 1/8 per cell") {
  ResponseSpec spec = build_spec(ViolationClass::Air, kBinary);
  ThetaVector theta;
  theta.cls = ViolationClass::Air;
  theta.response.assign(32, 1.0 / 32.0);
  RngStream rng(44);
  Dataset d = sample_dataset(theta, spec, 80000, rng);
  ContingencyTable t = build_contingency(d);
  // 3 sigma of a binomial(80000, 1/8) proportion is about 0.0035
  for (std::uint64_t q : t.counts)
    CHECK(std::abs(static_cast<double>(q) / 80000.0 - 0.125) < 0.0035);
}

TEST_CASE("theta JSON round trip preserves the layout") {
  ResponseSpec spec = build_spec(ViolationClass::Valid, kBinary);
  RngStream rng(47);
  ThetaVector theta = sample_model(spec, SamplingConstraint::none(), rng);
  ThetaVector back = theta_from_json(theta_to_json(theta));
  CHECK(back.cls == theta.cls);
  CHECK(back.z_probs == theta.z_probs);
  CHECK(back.response == theta.response);
  CHECK(response_spec_to_json(spec).find("\"valid\"") != std::string::npos);
}
