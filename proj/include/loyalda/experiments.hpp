#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loyalda/engine.hpp"
#include "loyalda/types.hpp"

namespace loyalda {

enum class MarketKind { kBalanced, kUnbalanced };

std::string_view to_string(MarketKind kind);
MarketKind parse_market_kind(std::string_view text);

/// Balanced(n) is n doctors and n hospitals, Unbalanced(n) has n + 1 doctors.
struct Market {
  MarketKind kind = MarketKind::kBalanced;
  std::uint32_t n = 0;

  MarketShape shape() const;
  friend bool operator==(const Market&, const Market&) = default;
};

/// Evaluates a loyalty expression such as "n-sqrt(n)*ln(n)" or "n/4" with
/// `n` bound to the number of hospitals, then floors it. Supports + - * /,
/// parentheses, unary minus, sqrt, ln, floor and numeric literals.
double eval_expression(std::string_view expr, double n);

/// Floor of eval_expression. Throws Error unless the result lies in
/// [0, |D| - 1], so for Unbalanced(n) "n" is a valid k.
std::uint32_t resolve_k(std::string_view expr, const Market& market);

struct ExperimentSpec {
  Market market;
  std::vector<std::string> k_grid;
  std::uint32_t seeds = 100;
  std::uint64_t base_seed = 0;
  NextKind next = NextKind::kFifo;
  bool amnesiac = false;
  bool snapshot_balanced_end = false;
  bool snapshot_final = false;
  std::size_t threads = 0;  // 0 = default parallelism

  /// Evaluated grid, in the order given. Throws on any invalid entry.
  std::vector<std::uint32_t> resolved_k() const;
  void validate() const;
};

/// Seed of the run with the given index. Shared across the k grid, so every k
/// sees the same preferences and initial queue order for a given index.
std::uint64_t run_seed(std::uint64_t base_seed, std::uint32_t seed_index);

/// ℓ = √n·ln n, the width used for the set T.
double t_width(std::uint32_t n);

struct SweepRow {
  MarketKind market = MarketKind::kBalanced;
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  std::uint64_t seed = 0;
  NextKind policy = NextKind::kFifo;
  std::uint64_t total_proposals = 0;
  std::uint64_t proposals_balanced = 0;
  std::uint64_t proposals_unbalanced = 0;
  double avg_doctor_rank = 0;
  double avg_hospital_rank = 0;
  std::uint32_t heavy_doctors = 0;
  std::uint32_t heavy_hospitals = 0;
  std::uint32_t s_a_size = 0;
  std::uint32_t t_size = 0;
  std::uint32_t t_rematched = 0;
  Termination termination = Termination::kAllDoctorsMatched;

  // Not part of the CSV.
  std::uint32_t unbalanced_proposers = 0;
  std::uint32_t s_a_rematched = 0;
  std::uint32_t rematched = 0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Derives a sweep row from one finished run.
SweepRow summarize_run(const RunOutcome& outcome, const Market& market, std::uint32_t k,
                       std::uint64_t seed);

/// Runs a single (market, k, seed) point. `seed` is the run seed itself.
RunOutcome run_point(const Market& market, std::uint32_t k, std::uint64_t seed, NextKind next,
                     bool amnesiac, bool record_history = false);

struct Summary {
  double mean = 0;
  double stddev = 0;  // sample standard deviation, 0 for a single value
};

Summary summarize(const std::vector<double>& values);

struct KAggregate {
  std::uint32_t k = 0;
  std::uint32_t runs = 0;
  Summary avg_doctor_rank;
  Summary avg_hospital_rank;
  Summary total_proposals;
  Summary proposals_balanced;
  Summary proposals_unbalanced;
  Summary heavy_doctors;
  Summary heavy_hospitals;
  Summary s_a_size;
  Summary t_size;
  Summary t_rematched;
  Summary unbalanced_proposers;
  Summary rematched;
  double s_a_rematched_fraction = 0;  // pooled over runs, 0 when S_A is always empty
  double t_rematched_fraction = 0;    // pooled over runs
  std::uint32_t exhausted_runs = 0;
};

struct SweepResult {
  ExperimentSpec spec;
  std::vector<std::uint32_t> ks;
  std::vector<SweepRow> rows;  // k-major, then seed index
  std::vector<KAggregate> aggregates;
};

SweepResult sweep(const ExperimentSpec& spec);
std::vector<KAggregate> aggregate(const std::vector<std::uint32_t>& ks,
                                  const std::vector<SweepRow>& rows);

struct RankHistogram {
  std::vector<Rank> ranks;  // per hospital, 0 when unmatched
  std::uint32_t bin_width = 1;
  std::vector<std::uint32_t> bins;  // bins[i] counts ranks in [i*w + 1, (i+1)*w]

  static RankHistogram from_ranks(std::vector<Rank> ranks, std::uint32_t max_rank,
                                  std::uint32_t num_bins);
  std::uint32_t mass() const;
};

struct Snapshot {
  Market market;
  std::uint32_t k = 0;
  std::uint64_t seed = 0;
  RankHistogram balanced_end;
  RankHistogram final;
  std::vector<Hospital> rematched;  // match changed during the unbalanced phase
  std::vector<Hospital> s_a;
  std::vector<Hospital> t;
  std::vector<Hospital> improved;  // final rank better than f_h
  std::uint32_t unbalanced_proposers = 0;
  std::uint64_t proposals_unbalanced = 0;

  double rematched_fraction_of(const std::vector<Hospital>& set) const;
  double improved_fraction_of(const std::vector<Hospital>& set) const;
};

/// Both histograms use `num_bins` bins over [1, |D|].
Snapshot snapshot(const Market& market, std::uint32_t k, std::uint64_t seed, NextKind next,
                  std::uint32_t num_bins = 50);

struct HospitalClasses {
  std::uint32_t f = 0;
  std::uint32_t h = 0;
  std::uint32_t m = 0;
  std::vector<std::uint32_t> e;  // E_1 .. E_{c-2}
  std::uint32_t u = 0;

  std::uint32_t total() const;
};

/// Partitions hospitals by their current rank for the easy/moderate phase
/// analysis at k = n/c. ranks[h] == 0 means unmatched. Ranks beyond the last
/// E band (possible when |D| = n + 1) fall into the last one.
HospitalClasses classify_hospitals(const std::vector<Rank>& ranks, std::uint32_t n, double c);

struct ModeratePhaseResult {
  bool reached = false;  // every hospital in F or H at some point
  std::uint64_t proposals = 0;
  HospitalClasses classes;
};

/// Steps an Unbalanced(n) run at loyalty k and classifies hospitals at the
/// first moment all of them are in F or H (or at termination if that never
/// happens).
ModeratePhaseResult moderate_phase_end(std::uint32_t n, std::uint32_t k, double c,
                                       std::uint64_t seed, NextKind next = NextKind::kFifo);

/// Named figure presets. `n` overrides the preset's market size when set.
ExperimentSpec preset(std::string_view name, std::optional<std::uint32_t> n = std::nullopt);
std::vector<std::string> preset_names();

}  // namespace loyalda
