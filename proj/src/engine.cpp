#include "loyalda/engine.hpp"

#include <algorithm>
#include <numeric>

namespace loyalda {

std::string_view to_string(NextKind kind) {
  switch (kind) {
    case NextKind::kFifo: return "fifo";
    case NextKind::kLifo: return "lifo";
    case NextKind::kUniformRandom: return "random";
  }
  return "?";
}

NextKind parse_next_kind(std::string_view text) {
  if (text == "fifo") return NextKind::kFifo;
  if (text == "lifo") return NextKind::kLifo;
  if (text == "random") return NextKind::kUniformRandom;
  throw Error("unknown next policy '" + std::string(text) + "' (fifo, lifo, random)");
}

std::string_view to_string(Termination t) {
  return t == Termination::kAllDoctorsMatched ? "all_matched" : "exhausted";
}

NextPolicy::NextPolicy(NextKind kind, const std::vector<Doctor>& initial_order, std::uint64_t seed)
    : kind_(kind), rng_(seed, StreamKind::kNextPolicy, 0) {
  if (kind_ == NextKind::kLifo) {
    // Top of the stack is the back; the first doctor of the order goes first.
    members_.assign(initial_order.rbegin(), initial_order.rend());
  } else {
    members_.assign(initial_order.begin(), initial_order.end());
  }
}

NextPolicy NextPolicy::in_index_order(NextKind kind, std::uint32_t num_doctors, std::uint64_t seed) {
  std::vector<Doctor> order(num_doctors);
  std::iota(order.begin(), order.end(), Doctor{0});
  return NextPolicy(kind, order, seed);
}

NextPolicy NextPolicy::shuffled(NextKind kind, std::uint32_t num_doctors, std::uint64_t seed) {
  std::vector<Doctor> order(num_doctors);
  std::iota(order.begin(), order.end(), Doctor{0});
  Stream rng(seed, StreamKind::kQueueOrder, 0);
  for (std::uint32_t i = num_doctors; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return NextPolicy(kind, order, seed);
}

Doctor NextPolicy::choose() {
  if (members_.empty()) throw InvalidStateError("next: no unmatched doctor");
  switch (kind_) {
    case NextKind::kFifo: chosen_ = 0; break;
    case NextKind::kLifo: chosen_ = members_.size() - 1; break;
    case NextKind::kUniformRandom: chosen_ = rng_.below(members_.size()); break;
  }
  return members_[chosen_];
}

void NextPolicy::remove_chosen() {
  switch (kind_) {
    case NextKind::kFifo: members_.pop_front(); break;
    case NextKind::kLifo: members_.pop_back(); break;
    case NextKind::kUniformRandom:
      members_[chosen_] = members_.back();
      members_.pop_back();
      break;
  }
}

void NextPolicy::add(Doctor d) { members_.push_back(d); }

Engine::Engine(PreferenceOracle& prefs, NextPolicy next, AcceptPolicy accept, EngineOptions options)
    : prefs_(prefs), next_(std::move(next)), accept_(std::move(accept)), options_(options) {
  const auto shape = prefs_.shape();
  accept_.validate(shape.num_doctors);
  if (next_.size() != shape.num_doctors) {
    throw Error("next policy must start with every doctor unmatched");
  }
  state_.matching = Matching(shape);
  state_.doctor_rank.assign(shape.num_doctors, 0);
  state_.hospital_rank.assign(shape.num_hospitals, 0);
  state_.hospital_offers.assign(shape.num_hospitals, 0);
  state_.first_rank.assign(shape.num_hospitals, 0);
  state_.proposed_in_unbalanced.assign(shape.num_doctors, false);
}

HistoryEvent Engine::step() {
  if (done()) throw InvalidStateError("step called after termination");
  const auto shape = prefs_.shape();
  auto& s = state_;

  const Doctor d = next_.choose();
  HistoryEvent ev;
  ev.doctor = d;
  ev.ordinal = ++s.proposals;
  if (options_.amnesiac) {
    const auto draw = prefs_.amnesiac_choice(d);
    ev.hospital = draw.hospital;
    ev.redundant = draw.redundant;
  } else {
    ev.hospital = prefs_.next_choice(d);
  }
  const Hospital h = ev.hospital;
  ev.incumbent = s.matching.hospital_to_doctor[h];

  if (s.phase == Phase::kBalanced) {
    ++s.proposals_balanced;
  } else {
    ++s.proposals_unbalanced;
    s.proposed_in_unbalanced[d] = true;
  }

  if (ev.redundant) {
    ++s.redundant_proposals;
  } else {
    ++s.hospital_offers[h];
    const Rank rank_new = prefs_.rank_of(h, d);
    const auto rank_incumbent =
        ev.incumbent == kUnmatched ? std::nullopt : std::optional<Rank>(s.hospital_rank[h]);
    ev.accepted = accept_(rank_new, rank_incumbent);
    if (ev.accepted) {
      next_.remove_chosen();
      if (ev.incumbent != kUnmatched) {
        s.matching.doctor_to_hospital[ev.incumbent] = kUnmatched;
        s.doctor_rank[ev.incumbent] = 0;
        next_.add(ev.incumbent);
        if (prefs_.proposals_made(ev.incumbent) == shape.num_hospitals) s.exhausted = ev.incumbent;
      } else {
        ++s.matched_hospitals;
        s.first_rank[h] = rank_new;
      }
      s.matching.assign(d, h);
      // h was just appended to d's proposal sequence.
      s.doctor_rank[d] = prefs_.proposals_made(d);
      s.hospital_rank[h] = rank_new;
      if (s.phase == Phase::kBalanced && s.matched_hospitals == shape.num_hospitals) {
        enter_unbalanced_phase();
      }
    }
  }
  if (!ev.accepted && prefs_.proposals_made(d) == shape.num_hospitals) s.exhausted = d;

  if (s.phase == Phase::kUnbalanced && next_.size() != shape.num_doctors - shape.num_hospitals) {
    throw InvalidStateError("unbalanced phase must keep |U| = |D| - |H|");
  }
  if (options_.record_history) s.history.push_back(ev);
  return ev;
}

void Engine::enter_unbalanced_phase() {
  state_.phase = Phase::kUnbalanced;
  state_.balanced_end_rank = state_.hospital_rank;
  state_.balanced_end_match = state_.matching.hospital_to_doctor;
}

void Engine::run_to_completion() {
  while (!done()) step();
}

RunOutcome Engine::outcome() const {
  const auto shape = prefs_.shape();
  const auto& s = state_;
  RunOutcome out;
  out.shape = shape;
  out.accept = accept_.name();
  out.k = accept_.k();
  out.next = next_.kind();
  out.amnesiac = options_.amnesiac;
  out.final_matching = s.matching;
  out.termination_cause = next_.empty() ? Termination::kAllDoctorsMatched : Termination::kDoctorExhausted;
  out.exhausted_doctor = s.exhausted;
  out.total_proposals = s.proposals;
  out.proposals_balanced = s.proposals_balanced;
  out.proposals_unbalanced = s.proposals_unbalanced;
  out.redundant_proposals = s.redundant_proposals;

  std::uint64_t rank_sum = 0, matched = 0, proposal_sum = 0;
  out.doctor_proposals.resize(shape.num_doctors);
  for (Doctor d = 0; d < shape.num_doctors; ++d) {
    const auto m = prefs_.proposals_made(d);
    out.doctor_proposals[d] = m;
    proposal_sum += m;
    if (2ULL * m >= shape.num_hospitals) ++out.heavy_doctor_count;
    if (s.doctor_rank[d] != 0) {
      rank_sum += s.doctor_rank[d];
      ++matched;
    } else {
      out.unmatched_doctor_rank = shape.num_hospitals + 1;
    }
  }
  out.avg_doctor_rank = matched ? static_cast<double>(rank_sum) / static_cast<double>(matched) : 0.0;
  out.avg_doctor_proposals = static_cast<double>(proposal_sum) / shape.num_doctors;

  std::uint64_t hrank_sum = 0, hmatched = 0;
  for (Hospital h = 0; h < shape.num_hospitals; ++h) {
    if (2ULL * s.hospital_offers[h] >= shape.num_hospitals) ++out.heavy_hospital_count;
    if (s.hospital_rank[h] != 0) {
      hrank_sum += s.hospital_rank[h];
      ++hmatched;
    }
  }
  out.avg_hospital_rank = hmatched ? static_cast<double>(hrank_sum) / static_cast<double>(hmatched) : 0.0;

  out.doctor_ranks = s.doctor_rank;
  out.hospital_ranks = s.hospital_rank;
  out.first_ranks = s.first_rank;
  out.hospital_offers = s.hospital_offers;
  out.reached_unbalanced_phase = s.phase == Phase::kUnbalanced;
  out.balanced_end_ranks = s.balanced_end_rank;
  out.balanced_end_match = s.balanced_end_match;
  out.unbalanced_proposers = static_cast<std::uint32_t>(
      std::count(s.proposed_in_unbalanced.begin(), s.proposed_in_unbalanced.end(), true));
  out.history = s.history;
  return out;
}

RunOutcome run(PreferenceOracle& prefs, NextPolicy next, const AcceptPolicy& accept,
               EngineOptions options) {
  Engine engine(prefs, std::move(next), accept, options);
  engine.run_to_completion();
  return engine.outcome();
}

}  // namespace loyalda
