#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loyalda/accept.hpp"
#include "loyalda/prefs.hpp"
#include "loyalda/rng.hpp"
#include "loyalda/types.hpp"

namespace loyalda {

enum class NextKind { kFifo, kLifo, kUniformRandom };

std::string_view to_string(NextKind kind);
NextKind parse_next_kind(std::string_view text);

/// Chooses which unmatched doctor proposes next. Holds exactly the set U.
///
/// FIFO keeps a rejected proposer at the head (they keep proposing until
/// accepted) and sends a displaced doctor to the tail. LIFO pushes a displaced
/// doctor on top, so they propose next. UniformRandom draws from U every step.
class NextPolicy {
 public:
  NextPolicy(NextKind kind, const std::vector<Doctor>& initial_order, std::uint64_t seed);

  /// All doctors in index order.
  static NextPolicy in_index_order(NextKind kind, std::uint32_t num_doctors, std::uint64_t seed);
  /// All doctors in an order shuffled by the queue-order stream of `seed`.
  static NextPolicy shuffled(NextKind kind, std::uint32_t num_doctors, std::uint64_t seed);

  NextKind kind() const { return kind_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }

  /// The doctor proposing in this step.
  Doctor choose();
  /// The doctor returned by the last `choose` was accepted and leaves U.
  void remove_chosen();
  /// A displaced doctor re-enters U.
  void add(Doctor d);

 private:
  NextKind kind_;
  std::deque<Doctor> members_;
  std::size_t chosen_ = 0;
  Stream rng_;
};

enum class Phase { kBalanced, kUnbalanced };
enum class Termination { kAllDoctorsMatched, kDoctorExhausted };

std::string_view to_string(Termination t);

struct HistoryEvent {
  Doctor doctor = kUnmatched;
  Hospital hospital = kUnmatched;
  Doctor incumbent = kUnmatched;  // μ(h) before the proposal
  bool accepted = false;
  std::uint64_t ordinal = 0;  // 1-based
  bool redundant = false;

  friend bool operator==(const HistoryEvent&, const HistoryEvent&) = default;
};

struct MatchingState {
  Matching matching;
  std::vector<Rank> doctor_rank;     // rank_d(μ(d)), 0 when unmatched
  std::vector<Rank> hospital_rank;   // rank_h(μ(h)), 0 when unmatched
  std::vector<std::uint32_t> hospital_offers;  // m_h, non-redundant offers
  std::vector<Rank> first_rank;      // f_h, 0 until first acceptance
  std::vector<HistoryEvent> history;
  std::uint32_t matched_hospitals = 0;
  Phase phase = Phase::kBalanced;
  std::uint64_t proposals = 0;
  std::uint64_t proposals_balanced = 0;
  std::uint64_t proposals_unbalanced = 0;
  std::uint64_t redundant_proposals = 0;
  Doctor exhausted = kUnmatched;

  // Captured when every hospital first becomes matched.
  std::vector<Rank> balanced_end_rank;
  std::vector<Doctor> balanced_end_match;
  std::vector<bool> proposed_in_unbalanced;  // per doctor
};

struct RunOutcome {
  MarketShape shape;
  std::string accept;
  std::uint32_t k = 0;
  NextKind next = NextKind::kFifo;
  bool amnesiac = false;

  Matching final_matching;
  Termination termination_cause = Termination::kAllDoctorsMatched;
  Doctor exhausted_doctor = kUnmatched;

  std::uint64_t total_proposals = 0;
  std::uint64_t proposals_balanced = 0;
  std::uint64_t proposals_unbalanced = 0;
  std::uint64_t redundant_proposals = 0;

  double avg_doctor_rank = 0;      // matched doctors only
  double avg_hospital_rank = 0;    // matched hospitals only
  double avg_doctor_proposals = 0; // mean m_d over all doctors
  std::optional<Rank> unmatched_doctor_rank;  // |H|+1 when a doctor ends unmatched

  std::uint32_t heavy_doctor_count = 0;   // m_d >= |H|/2
  std::uint32_t heavy_hospital_count = 0; // m_h >= |H|/2

  std::vector<Rank> doctor_ranks;
  std::vector<Rank> hospital_ranks;
  std::vector<Rank> first_ranks;  // f_h
  std::vector<std::uint32_t> doctor_proposals;  // m_d
  std::vector<std::uint32_t> hospital_offers;   // m_h

  bool reached_unbalanced_phase = false;
  std::vector<Rank> balanced_end_ranks;
  std::vector<Doctor> balanced_end_match;
  std::uint32_t unbalanced_proposers = 0;

  std::vector<HistoryEvent> history;
};

struct EngineOptions {
  bool amnesiac = false;
  bool record_history = false;
};

/// Doctor-proposing deferred acceptance with pluggable next/accept functions.
/// Runs until U is empty or some doctor has been rejected by every hospital.
class Engine {
 public:
  Engine(PreferenceOracle& prefs, NextPolicy next, AcceptPolicy accept, EngineOptions options = {});

  bool done() const { return next_.empty() || state_.exhausted != kUnmatched; }
  /// Processes one proposal. Throws InvalidStateError once done.
  HistoryEvent step();
  void run_to_completion();

  const MatchingState& state() const { return state_; }
  const AcceptPolicy& accept() const { return accept_; }
  std::size_t unmatched_count() const { return next_.size(); }

  RunOutcome outcome() const;

 private:
  void enter_unbalanced_phase();

  PreferenceOracle& prefs_;
  NextPolicy next_;
  AcceptPolicy accept_;
  EngineOptions options_;
  MatchingState state_;
};

RunOutcome run(PreferenceOracle& prefs, NextPolicy next, const AcceptPolicy& accept,
               EngineOptions options = {});

}  // namespace loyalda
