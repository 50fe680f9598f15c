#include "loyalda/stability.hpp"

#include "loyalda/rng.hpp"

namespace loyalda {

BlockingReport verify_stable(const Matching& matching, PreferenceOracle& prefs,
                             const AcceptPolicy& accept, VerifyOptions options) {
  const auto shape = prefs.shape();
  if (!(matching.shape() == shape)) throw Error("verify: matching does not fit the market");

  BlockingReport report;
  Stream sampler(options.seed, StreamKind::kVerifySample, 0);
  for (Doctor d = 0; d < shape.num_doctors; ++d) {
    if (options.sample_fraction < 1.0 && sampler.unit() >= options.sample_fraction) continue;
    ++report.doctors_checked;
    const Hospital current = matching.doctor_to_hospital[d];
    const std::uint32_t better =
        current == kUnmatched ? shape.num_hospitals : prefs.doctor_rank(d, current) - 1;
    for (const Hospital h : prefs.preference_prefix(d, better)) {
      const Doctor incumbent = matching.hospital_to_doctor[h];
      const auto rank_incumbent =
          incumbent == kUnmatched ? std::nullopt : std::optional<Rank>(prefs.rank_of(h, incumbent));
      if (accept(prefs.rank_of(h, d), rank_incumbent)) report.pairs.push_back({d, h});
    }
  }
  report.is_stable = report.pairs.empty();
  return report;
}

std::string ConsistencyViolation::describe() const {
  const auto show = [](std::optional<Rank> r) { return r ? std::to_string(*r) : std::string("none"); };
  switch (property) {
    case 1:
      return "property 1: accepted rank " + std::to_string(rank_new) + " over better incumbent " +
             show(rank_incumbent);
    case 2:
      return "property 2: rejected rank " + std::to_string(rank_new) + " against incumbent " +
             show(rank_incumbent) + " but accepted worse rank " + show(rank_other);
    default:
      return "property 3: rejected rank " + std::to_string(rank_new) + " at an unmatched hospital";
  }
}

ConsistencyReport check_consistency(const AcceptPolicy& accept, std::uint32_t num_doctors,
                                    std::uint64_t trials, std::uint64_t seed) {
  ConsistencyReport report;
  if (num_doctors == 0) return report;
  const auto fail = [&](ConsistencyViolation v) {
    report.consistent = false;
    report.witness = v;
    return report;
  };
  Stream rng(seed);
  const auto draw = [&] { return static_cast<Rank>(rng.below(num_doctors) + 1); };

  for (std::uint64_t t = 0; t < trials; ++t) {
    const Rank solo = draw();
    if (!accept(solo, std::nullopt)) return fail({3, solo, std::nullopt, std::nullopt});
    if (num_doctors < 2) continue;

    Rank a = draw(), b = draw();
    while (b == a) b = draw();
    if (a > b) std::swap(a, b);
    // a is preferred to b: a worse proposer never displaces a better incumbent.
    if (accept(b, a)) return fail({1, b, a, std::nullopt});
    if (num_doctors < 3) continue;

    const Rank incumbent = draw();
    Rank better = draw(), worse = draw();
    while (better == incumbent) better = draw();
    while (worse == incumbent || worse == better) worse = draw();
    if (better > worse) std::swap(better, worse);
    if (!accept(better, incumbent) && accept(worse, incumbent)) {
      return fail({2, better, incumbent, worse});
    }
  }
  return report;
}

}  // namespace loyalda
