#include <doctest.h>

#include <algorithm>
#include <random>

#include "ivtest/core.hpp"
#include "ivtest/rng.hpp"

using namespace ivtest;

namespace {

Dataset make_dataset(std::vector<Obs> rows, Levels lv = Levels{2, 2, 2}) {
  Dataset d;
  d.rows = std::move(rows);
  d.levels = lv;
  return d;
}

}  // namespace

TEST_CASE("validate_dataset passes clean binary rows through") {
  std::vector<RawRow> rows = {{0, 0, 0}, {1, 1, 1}};
  Dataset d = validate_dataset(rows, Levels{2, 2, 2});
  CHECK(d.rows.size() == 2);
  CHECK(d.dropped == 0);
  CHECK(d.rows[0] == Obs{0, 0, 0});
  CHECK(d.rows[1] == Obs{1, 1, 1});
}

TEST_CASE("validate_dataset rejects out-of-range rows in strict mode") {
  std::vector<RawRow> rows = {{0, 2, 0}};
  CHECK_THROWS_WITH_AS(validate_dataset(rows, Levels{2, 2, 2}),
                       doctest::Contains("row 0"), Error);
  try {
    validate_dataset(rows, Levels{2, 2, 2});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRangeLevel);
  }
}

TEST_CASE("validate_dataset drops and counts bad rows in lenient mode") {
  std::vector<RawRow> rows = {{0, 2, 0}, {1, 1, 1}};
  Dataset d = validate_dataset(rows, Levels{2, 2, 2}, MissingPolicy::Lenient);
  CHECK(d.rows.size() == 1);
  CHECK(d.dropped == 1);
  CHECK(d.rows[0] == Obs{1, 1, 1});
}

TEST_CASE("validate_dataset treats negative components as missing") {
  std::vector<RawRow> rows = {{-1, 0, 0}, {0, 0, 0}};
  Dataset d = validate_dataset(rows, Levels{2, 2, 2}, MissingPolicy::Lenient);
  CHECK(d.rows.size() == 1);
  CHECK(d.dropped == 1);
}

TEST_CASE("validate_dataset errors on empty input") {
  std::vector<RawRow> rows;
  CHECK_THROWS_AS(validate_dataset(rows, Levels{2, 2, 2}), Error);
  std::vector<RawRow> all_bad = {{0, 5, 0}};
  CHECK_THROWS_AS(
      validate_dataset(all_bad, Levels{2, 2, 2}, MissingPolicy::Lenient),
      Error);
}

TEST_CASE("levels ceiling rejects huge response spaces") {
  CHECK_THROWS_AS(validate_levels(Levels{8, 8, 8}), Error);
  CHECK_THROWS_AS(validate_levels(Levels{1, 2, 2}), Error);
  CHECK_NOTHROW(validate_levels(Levels{2, 2, 2}));
  CHECK_NOTHROW(validate_levels(Levels{3, 3, 3}));
}

TEST_CASE("build_contingency counts cells and materializes zeros") {
  Dataset d = make_dataset({{0, 0, 0}, {0, 0, 0}});
  ContingencyTable t = build_contingency(d);
  CHECK(t.total == 2);
  CHECK(t.counts.size() == 8);
  CHECK(t.at(0, 0, 0) == 2);
  CHECK(std::count(t.counts.begin(), t.counts.end(), 0) == 7);
}

TEST_CASE("build_contingency is permutation invariant") {
  RngStream rng(7);
  std::vector<Obs> rows;
  for (int i = 0; i < 200; ++i)
    rows.push_back(Obs{static_cast<int>(rng.next_index(2)),
                       static_cast<int>(rng.next_index(2)),
                       static_cast<int>(rng.next_index(2))});
  Dataset d1 = make_dataset(rows);
  std::mt19937_64 shuffler(99);
  std::shuffle(rows.begin(), rows.end(), shuffler);
  Dataset d2 = make_dataset(rows);
  CHECK(build_contingency(d1).counts == build_contingency(d2).counts);
}

TEST_CASE("cond_prob_vector normalizes per stratum") {
  Dataset d = make_dataset({{0, 0, 0}, {0, 0, 0}, {1, 1, 1}, {1, 1, 1}});
  CondProbVector f = cond_prob_vector(build_contingency(d));
  CHECK(f.at(0, 0, 0) == doctest::Approx(1.0));
  CHECK(f.at(1, 1, 1) == doctest::Approx(1.0));
  CHECK(f.at(0, 1, 1) == 0.0);
  CHECK(f.stratum_counts[0] == 2);
}

TEST_CASE("cond_prob_vector handles uniform and lopsided counts") {
  Dataset uniform = make_dataset({{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1},
                                  {1, 0, 0}, {1, 0, 1}, {1, 1, 0}, {1, 1, 1}});
  CondProbVector fu = cond_prob_vector(build_contingency(uniform));
  for (double v : fu.entries) CHECK(v == doctest::Approx(0.25));

  // Q(0,.,.) = (1,1,1,1), Q(1,.,.) = (4,0,0,0)
  std::vector<Obs> rows = {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}};
  for (int i = 0; i < 4; ++i) rows.push_back({1, 0, 0});
  CondProbVector f = cond_prob_vector(build_contingency(make_dataset(rows)));
  CHECK(f.at(0, 0, 0) == doctest::Approx(0.25));
  CHECK(f.at(0, 1, 1) == doctest::Approx(0.25));
  CHECK(f.at(1, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("cond_prob_vector reports empty strata") {
  Dataset d = make_dataset({{0, 0, 0}});
  CHECK_THROWS_AS(cond_prob_vector(build_contingency(d)), Error);
}

TEST_CASE("round trip: conditional probabilities sum to 1 per stratum") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed);
    Levels lv{2 + static_cast<int>(rng.next_index(2)),
              2 + static_cast<int>(rng.next_index(2)), 2};
    std::vector<Obs> rows;
    // force every stratum nonempty
    for (int z = 0; z < lv.z; ++z) rows.push_back(Obs{z, 0, 0});
    for (int i = 0; i < 300; ++i)
      rows.push_back(Obs{static_cast<int>(rng.next_index(lv.z)),
                         static_cast<int>(rng.next_index(lv.x)),
                         static_cast<int>(rng.next_index(lv.y))});
    CondProbVector f = cond_prob_vector(build_contingency(make_dataset(rows, lv)));
    for (int z = 0; z < lv.z; ++z) {
      double s = 0.0;
      for (int x = 0; x < lv.x; ++x)
        for (int y = 0; y < lv.y; ++y) s += f.at(z, x, y);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("stream seeding is stable and streams are independent") {
  RngStream a = substream(42, 0);
  RngStream b = substream(42, 0);
  RngStream c = substream(42, 1);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("uniform simplex draws are normalized") {
  RngStream rng(5);
  std::vector<double> v;
  uniform_simplex(rng, 16, v);
  double s = 0.0;
  for (double p : v) {
    CHECK(p > 0.0);
    s += p;
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}
