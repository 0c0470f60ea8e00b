#pragma once

// JSON forms of the domain types. Field names are snake_case; enums are
// their to_string names. from_json throws nlohmann::json::exception on
// missing fields and Error(InvalidConfig) on unknown enum names.

#include <json.hpp>

#include "qeloop/orchestrator.hpp"

namespace qeloop {

void to_json(nlohmann::json& j, const Artefact& a);
void from_json(const nlohmann::json& j, Artefact& a);
void to_json(nlohmann::json& j, const Corpus& c);
void from_json(const nlohmann::json& j, Corpus& c);
void to_json(nlohmann::json& j, const Segment& s);
void from_json(const nlohmann::json& j, Segment& s);
void to_json(nlohmann::json& j, const Thresholds& t);
void from_json(const nlohmann::json& j, Thresholds& t);
void to_json(nlohmann::json& j, const MatchPair& p);
void from_json(const nlohmann::json& j, MatchPair& p);
void to_json(nlohmann::json& j, const AlignmentResult& a);
void from_json(const nlohmann::json& j, AlignmentResult& a);
void to_json(nlohmann::json& j, const RubricScores& s);
void from_json(const nlohmann::json& j, RubricScores& s);
void to_json(nlohmann::json& j, const OpCounts& o);
void from_json(const nlohmann::json& j, OpCounts& o);
void to_json(nlohmann::json& j, const Recommendation& r);
void from_json(const nlohmann::json& j, Recommendation& r);
void to_json(nlohmann::json& j, const ReviewDecision& d);
void from_json(const nlohmann::json& j, ReviewDecision& d);
void to_json(nlohmann::json& j, const CategoryHistogram& h);
void from_json(const nlohmann::json& j, CategoryHistogram& h);
void to_json(nlohmann::json& j, const SummaryRecord& r);
void from_json(const nlohmann::json& j, SummaryRecord& r);
void to_json(nlohmann::json& j, const UpdatedRequirementRow& r);
void from_json(const nlohmann::json& j, UpdatedRequirementRow& r);
void to_json(nlohmann::json& j, const SlotRef& s);
void from_json(const nlohmann::json& j, SlotRef& s);
void to_json(nlohmann::json& j, const SlotEdit& e);
void from_json(const nlohmann::json& j, SlotEdit& e);
void to_json(nlohmann::json& j, const Draft& d);
void from_json(const nlohmann::json& j, Draft& d);
void to_json(nlohmann::json& j, const CycleState& s);
void from_json(const nlohmann::json& j, CycleState& s);
void to_json(nlohmann::json& j, const NegativeValidationReport& r);

}  // namespace qeloop
