#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loyalda/accept.hpp"
#include "loyalda/prefs.hpp"
#include "loyalda/types.hpp"

namespace loyalda {

struct BlockingPair {
  Doctor doctor;
  Hospital hospital;
  friend bool operator==(const BlockingPair&, const BlockingPair&) = default;
};

struct BlockingReport {
  std::vector<BlockingPair> pairs;
  bool is_stable = true;
  std::uint32_t doctors_checked = 0;
};

struct VerifyOptions {
  // Fraction of doctors whose pairs are inspected; 1 checks every pair.
  double sample_fraction = 1.0;
  std::uint64_t seed = 0;
};

/// Finds every (d, h) with h preferred by d to μ(d) (or d unmatched) and
/// accept(h, d, μ(h)) true. Forces lazy draws for every pair it inspects.
BlockingReport verify_stable(const Matching& matching, PreferenceOracle& prefs,
                             const AcceptPolicy& accept, VerifyOptions options = {});

struct ConsistencyViolation {
  int property = 0;  // 1, 2 or 3
  Rank rank_new = 0;
  std::optional<Rank> rank_incumbent;
  std::optional<Rank> rank_other;  // the worse doctor d^ for property 2
  std::string describe() const;
};

struct ConsistencyReport {
  bool consistent = true;
  std::optional<ConsistencyViolation> witness;
  explicit operator bool() const { return consistent; }
};

/// Property-tests the three consistency axioms on random rank triples drawn
/// from [1, num_doctors], plus the unmatched-incumbent case.
ConsistencyReport check_consistency(const AcceptPolicy& accept, std::uint32_t num_doctors,
                                    std::uint64_t trials, std::uint64_t seed = 0);

}  // namespace loyalda
