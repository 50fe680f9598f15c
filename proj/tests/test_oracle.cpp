#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loyalda/engine.hpp"
#include "loyalda/oracle.hpp"
#include "loyalda/stability.hpp"
#include "support.hpp"

using namespace loyalda;

namespace {

// All perfect (or hospital-saturating) matchings, via permutations of doctors.
std::vector<Matching> saturating_matchings(MarketShape shape) {
  std::vector<Matching> out;
  std::vector<Doctor> doctors(shape.num_doctors);
  std::iota(doctors.begin(), doctors.end(), Doctor{0});
  do {
    Matching m(shape);
    for (Hospital h = 0; h < shape.num_hospitals; ++h) m.assign(doctors[h], h);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  } while (std::next_permutation(doctors.begin(), doctors.end()));
  return out;
}

}  // namespace

TEST_CASE("harmonic numbers") {
  CHECK(harmonic(1) == 1.0);
  CHECK(harmonic(1000) == doctest::Approx(7.485470860550345).epsilon(1e-12));
  CHECK(harmonic(100) == doctest::Approx(5.187377517639621).epsilon(1e-12));
}

TEST_CASE("enumerate_stable: hand-checked instances") {
  SUBCASE("crossed 2x2 has both perfect matchings stable") {
    Instance crossed{{{0, 1}, {1, 0}}, {{1, 0}, {0, 1}}};
    const auto set = enumerate_stable(crossed, AcceptPolicy::classic());
    CHECK(set.matchings.size() == 2);
    REQUIRE(set.doctor_optimal.has_value());
    CHECK(set.doctor_optimal->doctor_to_hospital == std::vector<Hospital>{0, 1});
  }
  SUBCASE("shared favourite with loyalty 1") {
    Instance inst{{{0, 1}, {0, 1}}, {{0, 1}, {1, 0}}};
    const auto set = enumerate_stable(inst, AcceptPolicy::loyalty(1));
    CHECK(set.matchings.size() == 2);
    CHECK_FALSE(set.doctor_optimal.has_value());
    CHECK(enumerate_stable(inst, AcceptPolicy::classic()).matchings.size() == 1);
  }
  SUBCASE("maximal loyalty makes every perfect matching stable") {
    for (std::uint32_t n = 1; n <= 5; ++n) {
      const auto inst = random_instance({n, n}, n);
      const auto set = enumerate_stable(inst, AcceptPolicy::loyalty(n - 1));
      CHECK(set.matchings.size() == loyalda::testing::factorial(n));
    }
  }
  SUBCASE("size guard") {
    CHECK_THROWS_AS(enumerate_stable(random_instance({9, 9}, 1), AcceptPolicy::classic()), SizeLimitError);
    CHECK_NOTHROW(enumerate_stable(random_instance({8, 7}, 1), AcceptPolicy::classic()));
  }
}

TEST_CASE("enumerate_stable agrees with verify_stable on the whole universe") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::uint32_t n = 2 + seed % 4;
    const MarketShape shape{n + static_cast<std::uint32_t>(seed % 2), n};
    const auto inst = random_instance(shape, seed);
    const auto accept = AcceptPolicy::loyalty(seed % shape.num_doctors);
    const auto set = enumerate_stable(inst, accept);
    auto prefs = PreferenceOracle::from_explicit(inst);
    for (const auto& m : saturating_matchings(shape)) {
      CHECK(verify_stable(m, prefs, accept).is_stable == set.contains(m));
    }
    // Nothing outside the saturating universe is stable for these rules.
    const auto full = enumerate_stable(inst, accept, {.full_universe = true});
    CHECK(full.matchings.size() == set.matchings.size());
  }
}

TEST_CASE("rural hospital property") {
  Instance tiny{{{0}, {0}}, {{1, 0}}};
  CHECK(rural_hospital_check(tiny));
  CHECK(enumerate_stable(tiny, AcceptPolicy::classic()).matchings.size() == 1);

  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    REQUIRE(rural_hospital_check(random_instance({5, 4}, seed)));
  }
  CHECK_THROWS_AS(rural_hospital_check(random_instance({4, 4}, 0)), Error);
}

TEST_CASE("rural hospital property fails under loyalty") {
  const auto found = find_rural_counterexample({3, 2}, AcceptPolicy::loyalty(1), 500, 1);
  REQUIRE(found.has_value());
  const auto set = enumerate_stable(*found, AcceptPolicy::loyalty(1));
  const auto& u = set.unmatched_doctor_per_matching;
  CHECK(std::adjacent_find(u.begin(), u.end(), std::not_equal_to<>()) != u.end());
}

TEST_CASE("coupon collector") {
  CHECK(coupon_collector_sim(1, 50, 3).mean_attempts == 1.0);

  const double expected = 1000 * harmonic(1000);
  const auto stats = coupon_collector_sim(1000, 2000, 11);
  CHECK(stats.trials == 2000);
  CHECK(std::abs(stats.mean_attempts - expected) / expected <= 0.02);
  CHECK(stats.mean_attempts >= 1000);

  const auto tail = coupon_collector_sim(1000, 10000, 12);
  CHECK(tail.tail_threshold == doctest::Approx(2000 * std::log(1000.0)));
  CHECK(tail.tail_probability <= 0.01);
}

TEST_CASE("absent-minded collector") {
  const auto plain = coupon_collector_sim(100, 5000, 21);
  const auto q1 = absent_minded_sim(100, 1.0, 5000, 21);
  CHECK(q1.mean_attempts == plain.mean_attempts);

  const double h100 = harmonic(100);
  const auto half = absent_minded_sim(100, 0.5, 5000, 22);
  CHECK(half.mean_attempts <= 100 / 0.5 * h100);
  const auto tenth = absent_minded_sim(100, 0.1, 5000, 23);
  CHECK(tenth.mean_attempts <= 10 * 100 * h100);
  CHECK(tenth.mean_attempts >= plain.mean_attempts);

  CHECK_THROWS_AS(absent_minded_sim(10, 0.0, 1, 0), Error);
  CHECK_THROWS_AS(absent_minded_sim(10, 1.5, 1, 0), Error);
}

TEST_CASE("min element of a random subset") {
  CHECK(min_element_sim(20, 20, 100, 1) == 1.0);
  CHECK(std::abs(min_element_sim(99, 9, 100000, 2) - 10.0) <= 0.15);
  const double single = min_element_sim(99, 1, 100000, 3);
  CHECK(std::abs(single - 50.0) / 50.0 <= 0.01);
  CHECK_THROWS_AS(min_element_sim(5, 0, 1, 0), Error);
  CHECK_THROWS_AS(min_element_sim(5, 6, 1, 0), Error);
}

TEST_CASE("simulations do not depend on thread count") {
  const auto a = coupon_collector_sim(200, 300, 5, 1);
  const auto b = coupon_collector_sim(200, 300, 5, 4);
  CHECK(a.mean_attempts == b.mean_attempts);
  CHECK(a.stddev_attempts == b.stddev_attempts);
  CHECK(min_element_sim(50, 5, 1000, 8, 1) == min_element_sim(50, 5, 1000, 8, 3));
}
