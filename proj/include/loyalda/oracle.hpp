#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "loyalda/accept.hpp"
#include "loyalda/prefs.hpp"
#include "loyalda/types.hpp"

namespace loyalda {

/// Largest side enumerate_stable will accept.
inline constexpr std::uint32_t kEnumerationLimit = 8;

struct StableSet {
  std::vector<Matching> matchings;
  // Classic acceptance only: every doctor with their best stable partner.
  std::optional<Matching> doctor_optimal;
  // First unmatched doctor of each member (kUnmatched when none).
  std::vector<Doctor> unmatched_doctor_per_matching;

  bool contains(const Matching& m) const;
};

struct EnumerateOptions {
  // Also consider matchings that leave agents on the short side unmatched.
  bool full_universe = false;
};

/// Brute-force stable set: every maximal one-to-one matching (saturating the
/// short side) filtered by the absence of blocking pairs.
StableSet enumerate_stable(const Instance& instance, const AcceptPolicy& accept,
                           EnumerateOptions options = {});

/// True iff the same doctor is unmatched in every classic stable matching.
/// Requires |D| = |H| + 1 <= kEnumerationLimit.
bool rural_hospital_check(const Instance& instance);

/// Random search for an instance whose stable matchings under `accept`
/// disagree on the unmatched doctor.
std::optional<Instance> find_rural_counterexample(MarketShape shape, const AcceptPolicy& accept,
                                                  std::uint64_t attempts, std::uint64_t seed);

struct CollectorStats {
  std::uint64_t trials = 0;
  double mean_attempts = 0;
  double stddev_attempts = 0;
  double tail_threshold = 0;    // 2 n ln n
  double tail_probability = 0;  // fraction of trials with T > tail_threshold
};

double harmonic(std::uint64_t n);

CollectorStats coupon_collector_sim(std::uint32_t n, std::uint64_t trials, std::uint64_t seed,
                                    std::size_t threads = 0);

/// Each draw of a type not yet kept is kept with probability q. With q = 1
/// the draws coincide with coupon_collector_sim for the same seed.
CollectorStats absent_minded_sim(std::uint32_t n, double q, std::uint64_t trials,
                                 std::uint64_t seed, std::size_t threads = 0);

/// Mean of min(X) over uniform k-subsets X of {1..n}.
double min_element_sim(std::uint32_t n, std::uint32_t k, std::uint64_t trials, std::uint64_t seed,
                       std::size_t threads = 0);

}  // namespace loyalda
