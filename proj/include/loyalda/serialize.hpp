#pragma once

#include <json.hpp>

#include "loyalda/engine.hpp"
#include "loyalda/experiments.hpp"
#include "loyalda/oracle.hpp"
#include "loyalda/stability.hpp"

// JSON documents. Agent ids are 1-based and an unmatched slot is null.

namespace loyalda {

using Json = nlohmann::ordered_json;

Json to_json(const Matching& m);
Json to_json(const RunOutcome& out, bool include_history = false);
Json to_json(const BlockingReport& report);
Json to_json(const CollectorStats& stats);
Json to_json(const StableSet& set);
Json to_json(const ExperimentSpec& spec);  // thread count left out
Json to_json(const KAggregate& agg);
Json to_json(const SweepResult& result);
Json to_json(const RankHistogram& hist);
Json to_json(const Snapshot& snap);

/// Reads a matching from either {"doctor_to_hospital": [...]} or a run outcome
/// carrying "final_matching". Throws ParseError on shape or id problems.
Matching matching_from_json(const Json& doc, MarketShape shape);

}  // namespace loyalda
