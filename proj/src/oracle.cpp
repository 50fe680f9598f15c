#include "loyalda/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <absl/container/flat_hash_set.h>

#include "loyalda/parallel.hpp"
#include "loyalda/rng.hpp"

namespace loyalda {

bool StableSet::contains(const Matching& m) const {
  return std::find(matchings.begin(), matchings.end(), m) != matchings.end();
}

namespace {

struct RankTables {
  // doctor_rank[d][h] = rank_d(h), hospital_rank[h][d] = rank_h(d)
  std::vector<std::vector<Rank>> doctor_rank;
  std::vector<std::vector<Rank>> hospital_rank;

  explicit RankTables(const Instance& inst) {
    const auto shape = inst.shape();
    doctor_rank.assign(shape.num_doctors, std::vector<Rank>(shape.num_hospitals));
    hospital_rank.assign(shape.num_hospitals, std::vector<Rank>(shape.num_doctors));
    for (Doctor d = 0; d < shape.num_doctors; ++d) {
      for (std::uint32_t i = 0; i < shape.num_hospitals; ++i) doctor_rank[d][inst.doctor_prefs[d][i]] = i + 1;
    }
    for (Hospital h = 0; h < shape.num_hospitals; ++h) {
      for (std::uint32_t i = 0; i < shape.num_doctors; ++i) hospital_rank[h][inst.hospital_prefs[h][i]] = i + 1;
    }
  }
};

bool has_blocking_pair(const Matching& m, const RankTables& t, const AcceptPolicy& accept) {
  const auto shape = m.shape();
  for (Doctor d = 0; d < shape.num_doctors; ++d) {
    const Hospital cur = m.doctor_to_hospital[d];
    const Rank cur_rank = cur == kUnmatched ? shape.num_hospitals + 1 : t.doctor_rank[d][cur];
    for (Hospital h = 0; h < shape.num_hospitals; ++h) {
      if (t.doctor_rank[d][h] >= cur_rank) continue;
      const Doctor inc = m.hospital_to_doctor[h];
      const auto inc_rank = inc == kUnmatched ? std::nullopt : std::optional<Rank>(t.hospital_rank[h][inc]);
      if (accept(t.hospital_rank[h][d], inc_rank)) return true;
    }
  }
  return false;
}

void check_enumeration_size(MarketShape shape) {
  if (shape.num_doctors > kEnumerationLimit || shape.num_hospitals > kEnumerationLimit) {
    throw SizeLimitError("enumeration limited to " + std::to_string(kEnumerationLimit) +
                         " agents per side");
  }
}

}  // namespace

StableSet enumerate_stable(const Instance& instance, const AcceptPolicy& accept,
                           EnumerateOptions options) {
  const auto shape = instance.shape();
  check_enumeration_size(shape);
  instance.validate();
  const RankTables tables(instance);

  StableSet result;
  Matching current(shape);
  const auto consider = [&] {
    if (has_blocking_pair(current, tables, accept)) return;
    result.matchings.push_back(current);
    const auto& d2h = current.doctor_to_hospital;
    const auto it = std::find(d2h.begin(), d2h.end(), kUnmatched);
    result.unmatched_doctor_per_matching.push_back(
        it == d2h.end() ? kUnmatched : static_cast<Doctor>(it - d2h.begin()));
  };

  // Walk doctors in order; each takes an unused hospital or, when allowed,
  // stays unmatched. Without full_universe only matchings of maximum size
  // (min(|D|, |H|)) are kept.
  const std::uint32_t target = std::min(shape.num_doctors, shape.num_hospitals);
  std::function<void(Doctor, std::uint32_t)> walk = [&](Doctor d, std::uint32_t matched) {
    if (d == shape.num_doctors) {
      if (options.full_universe || matched == target) consider();
      return;
    }
    for (Hospital h = 0; h < shape.num_hospitals; ++h) {
      if (current.hospital_to_doctor[h] != kUnmatched) continue;
      current.assign(d, h);
      walk(d + 1, matched + 1);
      current.doctor_to_hospital[d] = kUnmatched;
      current.hospital_to_doctor[h] = kUnmatched;
    }
    // Leaving d unmatched can still reach the target if enough doctors remain.
    const std::uint32_t remaining = shape.num_doctors - d - 1;
    if (options.full_universe || matched + remaining >= target) walk(d + 1, matched);
  };
  walk(0, 0);

  if (accept.is_classic() && !result.matchings.empty()) {
    std::vector<Hospital> best(shape.num_doctors, kUnmatched);
    for (Doctor d = 0; d < shape.num_doctors; ++d) {
      Rank best_rank = shape.num_hospitals + 1;
      for (const auto& m : result.matchings) {
        const Hospital h = m.doctor_to_hospital[d];
        if (h != kUnmatched && tables.doctor_rank[d][h] < best_rank) {
          best_rank = tables.doctor_rank[d][h];
          best[d] = h;
        }
      }
    }
    // Lattice structure guarantees this is a member; keep the guard anyway.
    try {
      auto candidate = Matching::from_doctor_side(best, shape.num_hospitals);
      if (result.contains(candidate)) result.doctor_optimal = std::move(candidate);
    } catch (const Error&) {
    }
  }
  return result;
}

bool rural_hospital_check(const Instance& instance) {
  const auto shape = instance.shape();
  check_enumeration_size(shape);
  if (shape.num_doctors != shape.num_hospitals + 1) {
    throw Error("rural hospital check needs |D| = |H| + 1");
  }
  const auto set = enumerate_stable(instance, AcceptPolicy::classic());
  const auto& u = set.unmatched_doctor_per_matching;
  return std::adjacent_find(u.begin(), u.end(), std::not_equal_to<>()) == u.end();
}

std::optional<Instance> find_rural_counterexample(MarketShape shape, const AcceptPolicy& accept,
                                                  std::uint64_t attempts, std::uint64_t seed) {
  check_enumeration_size(shape);
  for (std::uint64_t a = 0; a < attempts; ++a) {
    auto inst = random_instance(shape, derive_seed(seed, StreamKind::kTrial, a));
    const auto set = enumerate_stable(inst, accept);
    const auto& u = set.unmatched_doctor_per_matching;
    if (std::adjacent_find(u.begin(), u.end(), std::not_equal_to<>()) != u.end()) return inst;
  }
  return std::nullopt;
}

double harmonic(std::uint64_t n) {
  double h = 0;
  for (std::uint64_t i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

namespace {

CollectorStats summarize(std::uint32_t n, const std::vector<std::uint64_t>& attempts) {
  CollectorStats s;
  s.trials = attempts.size();
  s.tail_threshold = 2.0 * n * std::log(static_cast<double>(n));
  if (attempts.empty()) return s;
  double sum = 0;
  std::uint64_t tail = 0;
  for (auto a : attempts) {
    sum += static_cast<double>(a);
    tail += static_cast<double>(a) > s.tail_threshold;
  }
  s.mean_attempts = sum / static_cast<double>(s.trials);
  double sq = 0;
  for (auto a : attempts) sq += (static_cast<double>(a) - s.mean_attempts) * (static_cast<double>(a) - s.mean_attempts);
  s.stddev_attempts = s.trials > 1 ? std::sqrt(sq / static_cast<double>(s.trials - 1)) : 0.0;
  s.tail_probability = static_cast<double>(tail) / static_cast<double>(s.trials);
  return s;
}

std::uint64_t collect(std::uint32_t n, double q, Stream& rng) {
  std::vector<bool> kept(n, false);
  std::uint32_t remaining = n;
  std::uint64_t attempts = 0;
  while (remaining > 0) {
    ++attempts;
    const auto type = rng.below(n);
    if (kept[type]) continue;
    if (q < 1.0 && rng.unit() >= q) continue;
    kept[type] = true;
    --remaining;
  }
  return attempts;
}

}  // namespace

CollectorStats coupon_collector_sim(std::uint32_t n, std::uint64_t trials, std::uint64_t seed,
                                    std::size_t threads) {
  return absent_minded_sim(n, 1.0, trials, seed, threads);
}

CollectorStats absent_minded_sim(std::uint32_t n, double q, std::uint64_t trials,
                                 std::uint64_t seed, std::size_t threads) {
  if (n == 0) throw Error("collector needs n >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw Error("absent-minded collector needs q in (0, 1]");
  const auto attempts = parallel_map(trials, threads, [&](std::size_t t) {
    Stream rng(seed, StreamKind::kTrial, t);
    return collect(n, q, rng);
  });
  return summarize(n, attempts);
}

double min_element_sim(std::uint32_t n, std::uint32_t k, std::uint64_t trials, std::uint64_t seed,
                       std::size_t threads) {
  if (k < 1 || k > n) throw Error("min-element sampling needs 1 <= k <= n");
  // Floyd's subset sampling over {1..n}.
  const auto mins = parallel_map(trials, threads, [&](std::size_t t) {
    Stream rng(seed, StreamKind::kTrial, t);
    absl::flat_hash_set<std::uint32_t> chosen;
    chosen.reserve(k);
    std::uint32_t lowest = n;
    for (std::uint32_t j = n - k + 1; j <= n; ++j) {
      const auto pick = static_cast<std::uint32_t>(rng.below(j) + 1);
      const auto value = chosen.insert(pick).second ? pick : j;
      if (value == j) chosen.insert(j);
      lowest = std::min(lowest, value);
    }
    return static_cast<double>(lowest);
  });
  return trials ? std::accumulate(mins.begin(), mins.end(), 0.0) / static_cast<double>(trials) : 0.0;
}

}  // namespace loyalda
