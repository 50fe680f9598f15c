#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "loyalda/prefs.hpp"
#include "support.hpp"

using namespace loyalda;
using loyalda::testing::chi_square_uniform;
using loyalda::testing::factorial;
using loyalda::testing::tv_from_uniform;

namespace {

// Two doctors, two hospitals, both doctors rank h1 first.
Instance footnote_instance() { return Instance{{{0, 1}, {0, 1}}, {{0, 1}, {1, 0}}}; }

}  // namespace

TEST_CASE("next_choice: single hospital") {
  auto o = PreferenceOracle::lazy({1, 1}, 42);
  CHECK(o.next_choice(0) == 0);
  CHECK(o.proposals_made(0) == 1);
  CHECK_THROWS_AS(o.next_choice(0), ExhaustedDoctorError);
}

TEST_CASE("next_choice: explicit replay") {
  Instance inst{{{1, 0, 2}}, {{0}, {0}, {0}}};
  auto o = PreferenceOracle::from_explicit(inst);
  CHECK(o.next_choice(0) == 1);
  CHECK(o.next_choice(0) == 0);
  CHECK(o.next_choice(0) == 2);
  CHECK_THROWS_AS(o.next_choice(0), ExhaustedDoctorError);
}

TEST_CASE("next_choice: first draw is uniform over hospitals") {
  std::vector<std::uint64_t> counts(3, 0);
  const int seeds = 30000;
  for (int s = 0; s < seeds; ++s) {
    auto o = PreferenceOracle::lazy({1, 3}, s);
    ++counts[o.next_choice(0)];
  }
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) / seeds - 1.0 / 3) <= 0.01);
  // df = 2, p = 0.001 critical value.
  CHECK(chi_square_uniform(counts) < 13.82);
}

TEST_CASE("next_choice: full sequence is a permutation") {
  for (std::uint32_t n : {1u, 2u, 7u, 64u, 300u}) {
    auto o = PreferenceOracle::lazy({2, n}, n * 31);
    std::set<Hospital> seen;
    for (std::uint32_t i = 0; i < n; ++i) seen.insert(o.next_choice(1));
    CHECK(seen.size() == n);
    CHECK(*seen.rbegin() == n - 1);
  }
}

TEST_CASE("amnesiac_choice") {
  SUBCASE("single hospital after one proposal is redundant") {
    auto o = PreferenceOracle::lazy({1, 1}, 3);
    CHECK(o.next_choice(0) == 0);
    const auto draw = o.amnesiac_choice(0);
    CHECK(draw.hospital == 0);
    CHECK(draw.redundant);
  }
  SUBCASE("fresh doctor is never redundant") {
    for (int s = 0; s < 200; ++s) {
      auto o = PreferenceOracle::lazy({3, 5}, s);
      CHECK_FALSE(o.amnesiac_choice(2).redundant);
    }
  }
  SUBCASE("redundancy rate equals proposed fraction") {
    const int seeds = 40000;
    int redundant = 0;
    std::vector<std::uint64_t> hit(4, 0);
    for (int s = 0; s < seeds; ++s) {
      auto o = PreferenceOracle::lazy({1, 4}, s);
      o.next_choice(0);
      o.next_choice(0);
      const auto draw = o.amnesiac_choice(0);
      redundant += draw.redundant;
      ++hit[draw.hospital];
    }
    CHECK(std::abs(static_cast<double>(redundant) / seeds - 0.5) <= 0.01);
    // The hospital itself is uniform over all four.
    CHECK(chi_square_uniform(hit) < 16.27);
  }
  SUBCASE("fresh draws extend the proposal sequence") {
    auto o = PreferenceOracle::lazy({1, 6}, 11);
    std::set<Hospital> fresh;
    for (int i = 0; i < 200 && o.proposals_made(0) < 6; ++i) {
      const auto draw = o.amnesiac_choice(0);
      CHECK(draw.redundant == (fresh.count(draw.hospital) == 1));
      fresh.insert(draw.hospital);
      CHECK(o.proposals_made(0) == fresh.size());
    }
    CHECK(o.proposals_made(0) == 6);
  }
}

TEST_CASE("rank_of") {
  SUBCASE("single doctor") {
    for (int s = 0; s < 20; ++s) {
      auto o = PreferenceOracle::lazy({1, 3}, s);
      CHECK(o.rank_of(2, 0) == 1);
    }
  }
  SUBCASE("explicit list position") {
    Instance inst{{{0}, {0}, {0}}, {{2, 0, 1}}};
    auto o = PreferenceOracle::from_explicit(inst);
    CHECK(o.rank_of(0, 0) == 2);
    CHECK(o.rank_of(0, 2) == 1);
  }
  SUBCASE("lazy ranks are cached") {
    auto o = PreferenceOracle::lazy({50, 2}, 5);
    const auto r = o.rank_of(1, 17);
    for (Doctor d = 0; d < 50; ++d) o.rank_of(1, d);
    CHECK(o.rank_of(1, 17) == r);
  }
  SUBCASE("first two queries match a uniform permutation prefix") {
    // Exact law: each ordered pair of distinct ranks in {1,2,3} has mass 1/6.
    std::map<std::pair<Rank, Rank>, std::uint64_t> counts;
    for (int s = 0; s < 60000; ++s) {
      auto o = PreferenceOracle::lazy({3, 1}, s);
      const auto a = o.rank_of(0, 2);
      const auto b = o.rank_of(0, 0);
      ++counts[{a, b}];
    }
    CHECK(counts.size() == 6);
    CHECK(tv_from_uniform(counts, 6) <= 0.02);
  }
}

TEST_CASE("from_explicit") {
  CHECK_NOTHROW(PreferenceOracle::from_explicit(Instance{{{0}}, {{0}}}));
  CHECK_THROWS_AS(PreferenceOracle::from_explicit(Instance{{{0, 0}, {0, 1}}, {{0, 1}, {1, 0}}}),
                  MalformedPermutationError);
  CHECK_THROWS_AS(PreferenceOracle::from_explicit(Instance{{{0}, {0}}, {{0}}}),
                  MalformedPermutationError);

  auto o = PreferenceOracle::from_explicit(footnote_instance());
  CHECK(o.mode() == PrefMode::kExplicit);
  CHECK(o.next_choice(0) == 0);
  CHECK(o.next_choice(1) == 0);
  CHECK(o.next_choice(1) == 1);
  CHECK(o.rank_of(0, 0) == 1);
  CHECK(o.rank_of(1, 0) == 2);
  CHECK(o.materialize() == footnote_instance());
}

TEST_CASE("distributional equivalence with upfront permutations") {
  // Doctor sequences and hospital rank vectors, |D| = |H| = 4, are uniform
  // over all 24 permutations.
  std::map<std::vector<std::uint32_t>, std::uint64_t> doctor_seq, hospital_ranks;
  const int seeds = 100000;
  for (int s = 0; s < seeds; ++s) {
    auto o = PreferenceOracle::lazy({4, 4}, s);
    std::vector<std::uint32_t> seq;
    for (int i = 0; i < 4; ++i) seq.push_back(o.next_choice(3));
    ++doctor_seq[seq];
    std::vector<std::uint32_t> ranks;
    for (Doctor d : {2u, 0u, 3u, 1u}) ranks.push_back(o.rank_of(1, d));
    ++hospital_ranks[ranks];
  }
  CHECK(doctor_seq.size() == factorial(4));
  CHECK(hospital_ranks.size() == factorial(4));
  CHECK(tv_from_uniform(doctor_seq, 24) <= 0.02);
  CHECK(tv_from_uniform(hospital_ranks, 24) <= 0.02);
}

TEST_CASE("determinism and stream isolation") {
  auto a = PreferenceOracle::lazy({20, 20}, 99);
  auto b = PreferenceOracle::lazy({20, 20}, 99);
  // b queries other agents first; per-agent streams keep doctor 5's list fixed.
  for (Doctor d = 0; d < 20; ++d) {
    if (d != 5) b.next_choice(d);
  }
  b.rank_of(3, 4);
  for (int i = 0; i < 20; ++i) CHECK(a.next_choice(5) == b.next_choice(5));

  auto c = PreferenceOracle::lazy({20, 20}, 99);
  auto d = PreferenceOracle::lazy({20, 20}, 99);
  CHECK(c.materialize() == d.materialize());
  CHECK_FALSE(PreferenceOracle::lazy({20, 20}, 100).materialize() == c.materialize());
}

TEST_CASE("permutation soundness of lazy ranks") {
  auto o = PreferenceOracle::lazy({300, 5}, 8);
  for (Hospital h = 0; h < 5; ++h) {
    for (Doctor d = 0; d < 300; d += (h + 1)) o.rank_of(h, d);
    std::set<Rank> ranks;
    for (auto [doc, r] : o.assigned_ranks(h)) {
      CHECK(r >= 1);
      CHECK(r <= 300);
      CHECK(ranks.insert(r).second);
    }
  }
  const auto inst = o.materialize();
  CHECK_NOTHROW(inst.validate());
}

TEST_CASE("instance file parsing") {
  SUBCASE("round trip") {
    const auto inst = random_instance({5, 4}, 17);
    std::stringstream ss;
    write_instance(ss, inst);
    CHECK(read_instance(ss) == inst);
  }
  SUBCASE("valid text") {
    std::istringstream in("2 2\n1 2\n1 2\n1 2\n2 1\n");
    CHECK(read_instance(in) == footnote_instance());
  }
  const auto rejects = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_instance(in), Error);
  };
  rejects("");
  rejects("2 2\n1 2\n1 2\n1 2\n");            // missing hospital line
  rejects("2 2\n1 2\n1 2\n1 2\n2 1\nextra\n");  // trailing content
  rejects("2 2\n1  2\n1 2\n1 2\n2 1\n");      // double space
  rejects("2 2\n1 2 \n1 2\n1 2\n2 1\n");      // trailing space
  rejects("2 2\n0 1\n1 2\n1 2\n2 1\n");       // 0 is not an id
  rejects("2 2\n1 1\n1 2\n1 2\n2 1\n");       // duplicate
  rejects("2 2\n1 2 3\n1 2\n1 2\n2 1\n");     // too many entries
  rejects("2 x\n");
  rejects("0 1\n");
  rejects("2 2\n1 2\n\n1 2\n2 1\n");          // blank line
}
