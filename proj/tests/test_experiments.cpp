#include <doctest.h>

#include <cmath>
#include <fstream>

#include "loyalda/experiments.hpp"
#include "loyalda/serialize.hpp"

using namespace loyalda;

TEST_CASE("k expressions") {
  CHECK(eval_expression("n-sqrt(n)*ln(n)", 1000) == doctest::Approx(781.5577).epsilon(1e-6));
  CHECK(eval_expression("2*(n+1)/4", 9) == 5.0);
  CHECK(eval_expression(" -3 + n ", 10) == 7.0);
  CHECK(eval_expression("floor(n/3)", 10) == 3.0);
  CHECK(eval_expression("1.5e1", 0) == 15.0);

  const Market unb{MarketKind::kUnbalanced, 1000};
  const Market bal{MarketKind::kBalanced, 1000};
  CHECK(resolve_k("n", unb) == 1000);
  CHECK(resolve_k("n-sqrt(n)", unb) == 968);
  CHECK(resolve_k("n-sqrt(n)*ln(n)", unb) == 781);
  CHECK(resolve_k("n-1", bal) == 999);
  CHECK_THROWS_AS(resolve_k("n", bal), Error);
  CHECK_THROWS_AS(resolve_k("-1", bal), Error);

  for (const char* bad : {"", "n/0", "n+", "(n", "m", "sqrt(-1)", "ln(0)", "n n", "exp(1)"}) {
    CHECK_THROWS_AS(eval_expression(bad, 10), Error);
  }
}

TEST_CASE("presets") {
  CHECK(preset("fig1b").resolved_k() ==
        std::vector<std::uint32_t>{0, 200, 400, 600, 781, 900, 968, 1000});
  CHECK(preset("fig3").market == Market{MarketKind::kUnbalanced, 1000});
  CHECK(preset("fig1a").market.shape() == MarketShape{1000, 1000});
  CHECK(preset("fig1a", 200).resolved_k().back() == 199);
  CHECK(preset("fig4").resolved_k() == std::vector<std::uint32_t>{0});
  CHECK(preset("fig5").resolved_k() == std::vector<std::uint32_t>{250});
  CHECK(preset("fig6").resolved_k() == std::vector<std::uint32_t>{361});
  CHECK(preset("fig7").resolved_k() == std::vector<std::uint32_t>{477});
  CHECK(preset("fig7").market.shape() == MarketShape{501, 500});
  CHECK_THROWS_AS(preset("fig2"), Error);
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name).validate());
}

TEST_CASE("sweep rows and aggregates") {
  ExperimentSpec spec;
  spec.market = {MarketKind::kUnbalanced, 60};
  spec.k_grid = {"0", "n/2", "n"};
  spec.seeds = 6;
  spec.base_seed = 77;
  spec.threads = 1;
  const auto res = sweep(spec);
  REQUIRE(res.rows.size() == 18);
  REQUIRE(res.aggregates.size() == 3);
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& row = res.rows[i];
    CHECK(row.k == res.ks[i / 6]);
    CHECK(row.seed == run_seed(77, static_cast<std::uint32_t>(i % 6)));
    CHECK(row.total_proposals == row.proposals_balanced + row.proposals_unbalanced);
    // Each row is reproducible from its own seed.
    const auto again = summarize_run(run_point(spec.market, row.k, row.seed, spec.next, false),
                                     spec.market, row.k, row.seed);
    CHECK(again == row);
  }
  // Same preferences across k for a seed index: the balanced phase at k = 0
  // and k = n can differ, but the seed column cannot.
  CHECK(res.rows[0].seed == res.rows[6].seed);

  std::vector<double> ranks;
  for (std::size_t i = 6; i < 12; ++i) ranks.push_back(res.rows[i].avg_doctor_rank);
  const auto s = summarize(ranks);
  CHECK(res.aggregates[1].avg_doctor_rank.mean == doctest::Approx(s.mean));
  CHECK(res.aggregates[1].avg_doctor_rank.stddev == doctest::Approx(s.stddev));
  CHECK(res.aggregates[1].runs == 6);

  spec.threads = 3;
  const auto threaded = sweep(spec);
  CHECK(threaded.rows == res.rows);

  spec.seeds = 0;
  CHECK_THROWS_AS(sweep(spec), Error);
}

TEST_CASE("summarize") {
  const auto s = summarize({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(s.mean == 5.0);
  CHECK(s.stddev == doctest::Approx(std::sqrt(32.0 / 7)));
  CHECK(summarize({3}).stddev == 0.0);
  CHECK(summarize({}).mean == 0.0);
}

TEST_CASE("aggregate handles a repeated k") {
  std::vector<SweepRow> rows(4);
  for (std::size_t i = 0; i < 4; ++i) {
    rows[i].k = i < 2 ? 5 : 9;
    rows[i].avg_doctor_rank = double(i);
  }
  const auto aggs = aggregate({5, 9, 5}, rows);
  REQUIRE(aggs.size() == 2);
  CHECK(aggs[0].runs == 2);
  CHECK(aggs[0].avg_doctor_rank.mean == 0.5);
}

TEST_CASE("S_A membership and first-match ranks") {
  // A hospital available at the flip never switched, so its rank is still
  // f_h. One that switched holds rank < f_h - k and can sit outside S_A with
  // f_h > k + 1, so the equivalence only holds for hospitals that never switched.
  const Market market{MarketKind::kUnbalanced, 200};
  for (std::uint32_t k : {0u, 50u, 100u, 185u, 200u}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto out = run_point(market, k, seed, NextKind::kFifo, false);
      REQUIRE(out.reached_unbalanced_phase);
      for (Hospital h = 0; h < 200; ++h) {
        const bool in_s_a = out.balanced_end_ranks[h] > k + 1;
        const bool switched = out.balanced_end_ranks[h] != out.first_ranks[h];
        if (in_s_a) CHECK(out.first_ranks[h] > k + 1);
        if (!switched) CHECK(in_s_a == (out.first_ranks[h] > k + 1));
        if (switched) CHECK(out.balanced_end_ranks[h] + k < out.first_ranks[h]);
      }
    }
  }
}

TEST_CASE("|S_A| concentration at k > n - sqrt(n)") {
  const std::uint32_t n = 1000;
  ExperimentSpec spec;
  spec.market = {MarketKind::kUnbalanced, n};
  spec.k_grid = {"n-sqrt(n)+1", "n"};
  spec.seeds = 100;
  const auto res = sweep(spec);
  const double bound = std::sqrt(double(n)) + 3 * std::pow(double(n), 0.25);
  for (const auto& a : res.aggregates) {
    INFO("k = " << a.k);
    CHECK(a.s_a_size.mean <= bound);
  }
}

TEST_CASE("|T| concentration") {
  const std::uint32_t n = 1000;
  const double ell = t_width(n);
  ExperimentSpec spec;
  spec.market = {MarketKind::kUnbalanced, n};
  spec.k_grid = {"0", "n/2", "n-sqrt(n)*ln(n)"};
  spec.seeds = 100;
  const auto res = sweep(spec);
  for (auto k : res.ks) {
    int inside = 0, total = 0;
    for (const auto& r : res.rows) {
      if (r.k != k) continue;
      ++total;
      inside += r.t_size >= ell / 4 && r.t_size <= ell;
    }
    INFO("k = " << k);
    CHECK(double(inside) / total >= 0.95);
  }
}

TEST_CASE("balanced phase is insensitive to loyalty") {
  ExperimentSpec spec = preset("fig3", 300);
  spec.seeds = 30;
  const auto res = sweep(spec);
  double h = 0;
  for (int i = 1; i <= 300; ++i) h += 1.0 / i;
  for (const auto& a : res.aggregates) {
    INFO("k = " << a.k);
    CHECK(a.proposals_balanced.mean >= 0.5 * 300 * h);
    CHECK(a.proposals_balanced.mean <= 2 * 300 * h);
  }
}

TEST_CASE("rank histograms") {
  const auto hist = RankHistogram::from_ranks({0, 1, 5, 5, 10, 3}, 10, 4);
  CHECK(hist.bin_width == 3);
  CHECK(hist.bins == std::vector<std::uint32_t>{2, 2, 0, 1});
  CHECK(hist.mass() == 5);
  CHECK_THROWS_AS(RankHistogram::from_ranks({11}, 10, 4), Error);
  CHECK_THROWS_AS(RankHistogram::from_ranks({1}, 10, 0), Error);
}

TEST_CASE("snapshots") {
  const Market market{MarketKind::kUnbalanced, 120};
  const auto snap = snapshot(market, 30, 5, NextKind::kFifo, 12);
  CHECK(snap.balanced_end.mass() == 120);
  CHECK(snap.final.mass() == 120);
  CHECK(snap.final.bins.size() == 11);
  CHECK(std::is_sorted(snap.rematched.begin(), snap.rematched.end()));
  for (Hospital h : snap.s_a) CHECK(snap.balanced_end.ranks[h] > 31);
  // A hospital that kept its balanced-end doctor kept its rank.
  for (Hospital h = 0; h < 120; ++h) {
    if (!std::binary_search(snap.rematched.begin(), snap.rematched.end(), h)) {
      CHECK(snap.final.ranks[h] == snap.balanced_end.ranks[h]);
    } else {
      CHECK(snap.final.ranks[h] < snap.balanced_end.ranks[h]);
    }
  }
  CHECK_THROWS_AS(snapshot({MarketKind::kBalanced, 10}, 0, 1, NextKind::kFifo), Error);
}

TEST_CASE("hospital classes") {
  // n = 100, c = 4: F = [1,25], H = [26,35], M = [36,50], E_1 = [51,75], E_2 = [76,100].
  const std::vector<Rank> ranks{0, 1, 25, 26, 35, 36, 50, 51, 75, 76, 100, 101};
  const auto cls = classify_hospitals(ranks, 100, 4);
  CHECK(cls.u == 1);
  CHECK(cls.f == 2);
  CHECK(cls.h == 2);
  CHECK(cls.m == 2);
  CHECK(cls.e == std::vector<std::uint32_t>{2, 3});
  CHECK(cls.total() == ranks.size());

  CHECK(classify_hospitals(std::vector<Rank>(50, 0), 100, 4).u == 50);
  CHECK(classify_hospitals(std::vector<Rank>(50, 1), 100, 4).f == 50);
  CHECK_THROWS_AS(classify_hospitals(ranks, 100, 2), Error);
  CHECK_THROWS_AS(classify_hospitals(ranks, 100, 10), Error);
  CHECK(classify_hospitals(ranks, 10000, std::log(10000.0)).e.size() == 8);
}

TEST_CASE("hard-to-match hospitals after the moderate phase") {
  // n = 10^4, c = ln n, k = n/c. The phase ends when every hospital is in F
  // or H, or at termination if that comes first.
  const std::uint32_t n = 10000;
  const double c = std::log(double(n));
  const auto k = resolve_k("n/ln(n)", {MarketKind::kUnbalanced, n});
  const double bound = 2 * c * std::sqrt(double(n));
  int within = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const auto r = moderate_phase_end(n, k, c, run_seed(2024, s));
    CHECK(r.classes.total() == n);
    within += r.classes.h <= bound;
  }
  CHECK(double(within) / seeds >= 0.99);
}

TEST_CASE("snapshot presets") {
  std::ifstream in(std::string(LOYALDA_TEST_DATA_DIR) + "/fixtures/pilot_thresholds.json");
  REQUIRE(in);
  const auto fixture = Json::parse(in);
  const double k0_threshold = fixture["k0_rematched_fraction"]["threshold"].get<double>();
  const int seeds = 20;

  // k = 0: most hospitals change partner after the balanced phase.
  const auto fig4 = preset("fig4");
  for (int s = 0; s < seeds; ++s) {
    const auto snap = snapshot(fig4.market, fig4.resolved_k()[0], s, NextKind::kFifo);
    CHECK(double(snap.rematched.size()) / fig4.market.n >= k0_threshold);
  }

  // k = n - sqrt(n): S_A mostly keeps its balanced-end partner.
  const auto fig7 = preset("fig7");
  double s_a_rematched = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto snap = snapshot(fig7.market, fig7.resolved_k()[0], s, NextKind::kFifo);
    s_a_rematched += snap.rematched_fraction_of(snap.s_a);
  }
  CHECK(s_a_rematched / seeds <= 0.2);

  // k = n - sqrt(n) ln n: T ends better than its first match.
  const auto fig6 = preset("fig6");
  double t_improved = 0, t_rematched = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto snap = snapshot(fig6.market, fig6.resolved_k()[0], s, NextKind::kFifo);
    t_improved += snap.improved_fraction_of(snap.t);
    t_rematched += snap.rematched_fraction_of(snap.t);
  }
  MESSAGE("T re-matched after the balanced phase: " << t_rematched / seeds);
  CHECK(t_improved / seeds >= 0.5);
}
