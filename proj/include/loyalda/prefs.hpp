#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "loyalda/rng.hpp"
#include "loyalda/types.hpp"

namespace loyalda {

/// Fully specified preferences, most preferred first, 0-based ids.
struct Instance {
  std::vector<std::vector<Hospital>> doctor_prefs;
  std::vector<std::vector<Doctor>> hospital_prefs;

  MarketShape shape() const {
    return {static_cast<std::uint32_t>(doctor_prefs.size()),
            static_cast<std::uint32_t>(hospital_prefs.size())};
  }

  /// Throws MalformedPermutationError unless every list is a permutation of
  /// the opposite side.
  void validate() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Instance file: "D H", then D doctor lines and H hospital lines, each a
/// space-separated permutation of 1-based ids of the opposite side.
Instance read_instance(std::istream& in);
Instance read_instance_file(const std::filesystem::path& path);
void write_instance(std::ostream& out, const Instance& instance);

/// Upfront uniform permutations for every agent (independent of the lazy path).
Instance random_instance(MarketShape shape, std::uint64_t seed);

/// Uniform permutation of [0, size) revealed one element at a time
/// (sparse Fisher-Yates). O(1) expected per draw, memory O(draws).
class LazyPermutation {
 public:
  LazyPermutation() = default;
  explicit LazyPermutation(std::uint32_t size) : size_(size) {}

  std::uint32_t size() const { return size_; }
  std::uint32_t drawn() const { return drawn_; }
  bool exhausted() const { return drawn_ == size_; }

  std::uint32_t draw(Stream& rng);

 private:
  std::uint32_t value_at(std::uint32_t pos) const {
    auto it = displaced_.find(pos);
    return it == displaced_.end() ? pos : it->second;
  }

  std::uint32_t size_ = 0;
  std::uint32_t drawn_ = 0;
  absl::flat_hash_map<std::uint32_t, std::uint32_t> displaced_;
};

enum class PrefMode { kLazy, kExplicit };

struct AmnesiacDraw {
  Hospital hospital;
  bool redundant;
};

/// Answers preference queries for one market. In lazy mode every value is
/// drawn on first use and cached, so a run only pays for what it inspects.
class PreferenceOracle {
 public:
  static PreferenceOracle lazy(MarketShape shape, std::uint64_t seed);
  /// `seed` only feeds amnesiac draws; list contents are taken verbatim.
  static PreferenceOracle from_explicit(Instance instance, std::uint64_t seed = 0);

  MarketShape shape() const { return shape_; }
  PrefMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }

  /// Next hospital on d's list; records it as proposed.
  Hospital next_choice(Doctor d);

  /// Uniform over all hospitals. A redundant draw names a hospital d already
  /// proposed to; a fresh draw is recorded as proposed.
  AmnesiacDraw amnesiac_choice(Doctor d);

  /// rank_h(d) in [1, |D|]. Lazy mode draws from h's unassigned ranks on first
  /// query.
  Rank rank_of(Hospital h, Doctor d);

  /// rank_d(h) in [1, |H|]; may force further draws of d's order.
  Rank doctor_rank(Doctor d, Hospital h);

  /// Distinct hospitals d has proposed to (m_d).
  std::uint32_t proposals_made(Doctor d) const { return doctors_[d].proposed; }

  /// d's first `count` hospitals in preference order. Forces draws but does
  /// not count as proposals.
  std::span<const Hospital> preference_prefix(Doctor d, std::uint32_t count);

  /// (doctor, rank) pairs h has assigned so far, in assignment order.
  std::vector<std::pair<Doctor, Rank>> assigned_ranks(Hospital h) const;

  /// Forces every remaining draw (doctors by index, then hospitals querying
  /// doctors by index) and returns the full preference lists.
  Instance materialize();

 private:
  struct DoctorSide {
    std::vector<Hospital> order;  // drawn prefix of the preference list
    std::uint32_t proposed = 0;
    LazyPermutation pool;
    Stream rng;
  };

  struct HospitalSide {
    absl::flat_hash_map<Doctor, Rank> ranks;
    std::vector<Doctor> query_order;
    LazyPermutation pool;
    Stream rng;
  };

  PreferenceOracle() = default;
  void extend_order(DoctorSide& side);

  MarketShape shape_;
  PrefMode mode_ = PrefMode::kLazy;
  std::uint64_t seed_ = 0;
  std::vector<DoctorSide> doctors_;
  std::vector<HospitalSide> hospitals_;
  // Explicit mode: explicit_ranks_[h][d] = rank_h(d).
  std::vector<std::vector<Rank>> explicit_ranks_;
};

}  // namespace loyalda
