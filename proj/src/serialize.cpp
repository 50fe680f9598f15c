#include "loyalda/serialize.hpp"

namespace loyalda {

namespace {

Json id_or_null(std::uint32_t id) { return id == kUnmatched ? Json(nullptr) : Json(id + 1); }

Json ids(const std::vector<std::uint32_t>& v) {
  Json arr = Json::array();
  for (auto id : v) arr.push_back(id_or_null(id));
  return arr;
}

Json summary(const Summary& s) { return Json{{"mean", s.mean}, {"stddev", s.stddev}}; }

}  // namespace

Json to_json(const Matching& m) {
  return Json{{"doctor_to_hospital", ids(m.doctor_to_hospital)},
              {"hospital_to_doctor", ids(m.hospital_to_doctor)}};
}

Json to_json(const RunOutcome& out, bool include_history) {
  Json j;
  j["num_doctors"] = out.shape.num_doctors;
  j["num_hospitals"] = out.shape.num_hospitals;
  j["accept"] = out.accept;
  j["k"] = out.k;
  j["next_policy"] = to_string(out.next);
  j["amnesiac"] = out.amnesiac;
  j["final_matching"] = to_json(out.final_matching);
  j["termination_cause"] = to_string(out.termination_cause);
  j["exhausted_doctor"] = id_or_null(out.exhausted_doctor);
  j["total_proposals"] = out.total_proposals;
  j["proposals_balanced"] = out.proposals_balanced;
  j["proposals_unbalanced"] = out.proposals_unbalanced;
  j["redundant_proposals"] = out.redundant_proposals;
  j["avg_doctor_rank"] = out.avg_doctor_rank;
  j["avg_hospital_rank"] = out.avg_hospital_rank;
  j["avg_doctor_proposals"] = out.avg_doctor_proposals;
  j["unmatched_doctor_rank"] =
      out.unmatched_doctor_rank ? Json(*out.unmatched_doctor_rank) : Json(nullptr);
  j["heavy_doctor_count"] = out.heavy_doctor_count;
  j["heavy_hospital_count"] = out.heavy_hospital_count;
  j["unbalanced_proposers"] = out.unbalanced_proposers;
  j["doctor_ranks"] = out.doctor_ranks;
  j["hospital_ranks"] = out.hospital_ranks;
  j["f_h"] = out.first_ranks;
  j["doctor_proposals"] = out.doctor_proposals;
  j["hospital_offers"] = out.hospital_offers;
  j["reached_unbalanced_phase"] = out.reached_unbalanced_phase;
  j["balanced_end_ranks"] = out.balanced_end_ranks;
  j["balanced_end_match"] = ids(out.balanced_end_match);
  if (include_history) {
    Json hist = Json::array();
    for (const auto& ev : out.history) {
      hist.push_back(Json{{"ordinal", ev.ordinal},
                          {"doctor", ev.doctor + 1},
                          {"hospital", ev.hospital + 1},
                          {"incumbent", id_or_null(ev.incumbent)},
                          {"accepted", ev.accepted},
                          {"redundant", ev.redundant}});
    }
    j["history"] = std::move(hist);
  }
  return j;
}

Json to_json(const BlockingReport& report) {
  Json pairs = Json::array();
  for (const auto& p : report.pairs) pairs.push_back(Json::array({p.doctor + 1, p.hospital + 1}));
  return Json{{"is_stable", report.is_stable},
              {"doctors_checked", report.doctors_checked},
              {"blocking_pairs", std::move(pairs)}};
}

Json to_json(const CollectorStats& stats) {
  return Json{{"trials", stats.trials},
              {"mean_attempts", stats.mean_attempts},
              {"stddev_attempts", stats.stddev_attempts},
              {"tail_threshold", stats.tail_threshold},
              {"tail_probability", stats.tail_probability}};
}

Json to_json(const StableSet& set) {
  Json ms = Json::array();
  for (const auto& m : set.matchings) ms.push_back(ids(m.doctor_to_hospital));
  return Json{{"count", set.matchings.size()},
              {"matchings", std::move(ms)},
              {"doctor_optimal",
               set.doctor_optimal ? ids(set.doctor_optimal->doctor_to_hospital) : Json(nullptr)},
              {"unmatched_doctor_per_matching", ids(set.unmatched_doctor_per_matching)}};
}

Json to_json(const ExperimentSpec& spec) {
  return Json{{"market", to_string(spec.market.kind)},
              {"n", spec.market.n},
              {"k_grid", spec.k_grid},
              {"seeds", spec.seeds},
              {"base_seed", spec.base_seed},
              {"next_policy", to_string(spec.next)},
              {"amnesiac", spec.amnesiac},
              {"snapshot_balanced_end", spec.snapshot_balanced_end},
              {"snapshot_final", spec.snapshot_final}};
}

Json to_json(const KAggregate& a) {
  return Json{{"k", a.k},
              {"runs", a.runs},
              {"avg_doctor_rank", summary(a.avg_doctor_rank)},
              {"avg_hospital_rank", summary(a.avg_hospital_rank)},
              {"total_proposals", summary(a.total_proposals)},
              {"proposals_balanced", summary(a.proposals_balanced)},
              {"proposals_unbalanced", summary(a.proposals_unbalanced)},
              {"heavy_doctors", summary(a.heavy_doctors)},
              {"heavy_hospitals", summary(a.heavy_hospitals)},
              {"s_a_size", summary(a.s_a_size)},
              {"t_size", summary(a.t_size)},
              {"t_rematched", summary(a.t_rematched)},
              {"unbalanced_proposers", summary(a.unbalanced_proposers)},
              {"rematched", summary(a.rematched)},
              {"s_a_rematched_fraction", a.s_a_rematched_fraction},
              {"t_rematched_fraction", a.t_rematched_fraction},
              {"exhausted_runs", a.exhausted_runs}};
}

Json to_json(const SweepResult& result) {
  Json aggs = Json::array();
  for (const auto& a : result.aggregates) aggs.push_back(to_json(a));
  return Json{{"config", to_json(result.spec)},
              {"k", result.ks},
              {"rows", result.rows.size()},
              {"aggregates", std::move(aggs)}};
}

Json to_json(const RankHistogram& hist) {
  return Json{{"bin_width", hist.bin_width}, {"bins", hist.bins}, {"ranks", hist.ranks}};
}

Json to_json(const Snapshot& snap) {
  const auto one_based = [](const std::vector<Hospital>& v) {
    Json arr = Json::array();
    for (auto h : v) arr.push_back(h + 1);
    return arr;
  };
  return Json{{"market", to_string(snap.market.kind)},
              {"n", snap.market.n},
              {"k", snap.k},
              {"seed", snap.seed},
              {"balanced_end", to_json(snap.balanced_end)},
              {"final", to_json(snap.final)},
              {"rematched", one_based(snap.rematched)},
              {"s_a", one_based(snap.s_a)},
              {"t", one_based(snap.t)},
              {"improved", one_based(snap.improved)},
              {"s_a_rematched_fraction", snap.rematched_fraction_of(snap.s_a)},
              {"t_rematched_fraction", snap.rematched_fraction_of(snap.t)},
              {"t_improved_fraction", snap.improved_fraction_of(snap.t)},
              {"unbalanced_proposers", snap.unbalanced_proposers},
              {"proposals_unbalanced", snap.proposals_unbalanced}};
}

Matching matching_from_json(const Json& doc, MarketShape shape) {
  const Json* src = &doc;
  if (doc.is_object() && doc.contains("final_matching")) src = &doc["final_matching"];
  if (!src->is_object() || !src->contains("doctor_to_hospital")) {
    throw ParseError("matching JSON needs a \"doctor_to_hospital\" array");
  }
  const auto& arr = (*src)["doctor_to_hospital"];
  if (!arr.is_array() || arr.size() != shape.num_doctors) {
    throw ParseError("\"doctor_to_hospital\" must list " + std::to_string(shape.num_doctors) +
                     " entries");
  }
  std::vector<Hospital> d2h;
  d2h.reserve(arr.size());
  for (const auto& v : arr) {
    if (v.is_null()) {
      d2h.push_back(kUnmatched);
    } else if (v.is_number_unsigned() && v.get<std::uint64_t>() >= 1 &&
               v.get<std::uint64_t>() <= shape.num_hospitals) {
      d2h.push_back(static_cast<Hospital>(v.get<std::uint64_t>() - 1));
    } else {
      throw ParseError("bad hospital id " + v.dump() + " in matching");
    }
  }
  try {
    return Matching::from_doctor_side(std::move(d2h), shape.num_hospitals);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
}

}  // namespace loyalda
