#include "qeloop/serialization.hpp"

#include <string>

#include "qeloop/error.hpp"

namespace qeloop {

using nlohmann::json;

namespace {

template <class E, class Parse>
E enum_at(const json& j, const char* key, Parse parse) {
  const auto name = j.at(key).get<std::string>();
  const auto v = parse(name);
  if (!v) throw Error(Errc::InvalidConfig, key, "unknown value: " + name);
  return *v;
}

json opt_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> opt_string_at(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

void to_json(json& j, const Artefact& a) {
  j = {{"id", a.id},         {"kind", to_string(a.kind)},     {"title", a.title},
       {"body", a.body},     {"origin", to_string(a.origin)}, {"source_cycle", a.source_cycle}};
}

void from_json(const json& j, Artefact& a) {
  a.id = j.at("id").get<std::string>();
  a.kind = enum_at<ArtefactKind>(j, "kind", parse_kind);
  a.title = j.at("title").get<std::string>();
  a.body = j.at("body").get<std::string>();
  a.origin = enum_at<Origin>(j, "origin", parse_origin);
  a.source_cycle = j.at("source_cycle").get<std::uint32_t>();
}

void to_json(json& j, const Corpus& c) {
  j = {{"project_id", c.project_id}, {"kind", to_string(c.kind)}, {"artefacts", c.artefacts}};
}

void from_json(const json& j, Corpus& c) {
  c.project_id = j.at("project_id").get<std::string>();
  c.kind = enum_at<ArtefactKind>(j, "kind", parse_kind);
  c.artefacts = j.at("artefacts").get<std::vector<Artefact>>();
}

void to_json(json& j, const Segment& s) { j = {{"artefact_id", s.artefact_id}, {"index", s.index}, {"text", s.text}}; }

void from_json(const json& j, Segment& s) {
  s.artefact_id = j.at("artefact_id").get<std::string>();
  s.index = j.at("index").get<std::size_t>();
  s.text = j.at("text").get<std::string>();
}

void to_json(json& j, const Thresholds& t) { j = {{"high", t.high}, {"medium", t.medium}, {"low", t.low}}; }

void from_json(const json& j, Thresholds& t) {
  t.high = j.at("high").get<double>();
  t.medium = j.at("medium").get<double>();
  t.low = j.at("low").get<double>();
}

void to_json(json& j, const MatchPair& p) {
  j = {{"left", p.left},
       {"right", p.right ? json(*p.right) : json(nullptr)},
       {"cosine", p.cosine},
       {"jaccard", p.jaccard},
       {"category", to_string(p.category)}};
}

void from_json(const json& j, MatchPair& p) {
  p.left = j.at("left").get<Segment>();
  p.right.reset();
  if (!j.at("right").is_null()) p.right = j.at("right").get<Segment>();
  p.cosine = j.at("cosine").get<double>();
  p.jaccard = j.at("jaccard").get<double>();
  p.category = enum_at<MatchCategory>(j, "category", parse_category);
}

void to_json(json& j, const AlignmentResult& a) { j = {{"pairs", a.pairs}, {"mean_cosine", a.mean_cosine}}; }

void from_json(const json& j, AlignmentResult& a) {
  a.pairs = j.at("pairs").get<std::vector<MatchPair>>();
  a.mean_cosine = j.at("mean_cosine").get<double>();
}

void to_json(json& j, const RubricScores& s) {
  j = {{"clarity", s.clarity},         {"completeness", s.completeness},
       {"testability", s.testability}, {"consistency", s.consistency},
       {"semantic_alignment", s.semantic_alignment}, {"backend_id", s.backend_id}};
}

void from_json(const json& j, RubricScores& s) {
  s.clarity = j.at("clarity").get<int>();
  s.completeness = j.at("completeness").get<int>();
  s.testability = j.at("testability").get<int>();
  s.consistency = j.at("consistency").get<int>();
  s.semantic_alignment = j.at("semantic_alignment").get<int>();
  s.backend_id = j.at("backend_id").get<std::string>();
}

void to_json(json& j, const OpCounts& o) {
  j = {{"forward", o.forward}, {"reverse", o.reverse}, {"judge", o.judge}, {"total", o.total()}};
}

void from_json(const json& j, OpCounts& o) {
  o.forward = j.at("forward").get<std::uint64_t>();
  o.reverse = j.at("reverse").get<std::uint64_t>();
  o.judge = j.at("judge").get<std::uint64_t>();
}

void to_json(json& j, const Recommendation& r) {
  j = {{"pair_id", r.pair_id},
       {"scope", to_string(r.scope)},
       {"pair", r.pair},
       {"action", to_string(r.action)},
       {"requires_human", r.requires_human},
       {"rationale", r.rationale},
       {"testing_impact", r.testing_impact},
       {"shared_entities", r.shared_entities},
       {"shared_verbs", r.shared_verbs}};
}

void from_json(const json& j, Recommendation& r) {
  r.pair_id = j.at("pair_id").get<std::string>();
  r.scope = enum_at<PairScope>(j, "scope", parse_scope);
  r.pair = j.at("pair").get<MatchPair>();
  r.action = enum_at<RecommendationAction>(j, "action", parse_action);
  r.requires_human = j.at("requires_human").get<bool>();
  r.rationale = j.at("rationale").get<std::string>();
  r.testing_impact = j.at("testing_impact").get<std::string>();
  r.shared_entities = j.at("shared_entities").get<std::vector<std::string>>();
  r.shared_verbs = j.at("shared_verbs").get<std::vector<std::string>>();
}

void to_json(json& j, const ReviewDecision& d) {
  j = {{"pair_id", d.pair_id},
       {"verdict", to_string(d.verdict)},
       {"edited_text", opt_string(d.edited_text)},
       {"reviewer", d.reviewer},
       {"decided_at", d.decided_at}};
}

// reviewer and decided_at may be omitted by clients.
void from_json(const json& j, ReviewDecision& d) {
  d.pair_id = j.at("pair_id").get<std::string>();
  d.verdict = enum_at<RecommendationAction>(j, "verdict", parse_action);
  d.edited_text = opt_string_at(j, "edited_text");
  d.reviewer = j.value("reviewer", std::string());
  d.decided_at = j.value("decided_at", std::string());
}

void to_json(json& j, const CategoryHistogram& h) {
  j = {{"no_match", h.no_match}, {"low", h.low}, {"medium", h.medium}, {"high", h.high}};
}

void from_json(const json& j, CategoryHistogram& h) {
  h.no_match = j.at("no_match").get<std::size_t>();
  h.low = j.at("low").get<std::size_t>();
  h.medium = j.at("medium").get<std::size_t>();
  h.high = j.at("high").get<std::size_t>();
}

void to_json(json& j, const SummaryRecord& r) {
  j = {{"cycle", r.cycle},
       {"mean_cosine", r.mean_cosine},
       {"histogram", r.histogram},
       {"clarity", r.clarity},
       {"completeness", r.completeness},
       {"testability", r.testability},
       {"consistency", r.consistency},
       {"semantic_alignment", r.semantic_alignment},
       {"mean_rubric", r.mean_rubric()},
       {"ops", r.ops}};
}

void from_json(const json& j, SummaryRecord& r) {
  r.cycle = j.at("cycle").get<std::uint32_t>();
  r.mean_cosine = j.at("mean_cosine").get<double>();
  r.histogram = j.at("histogram").get<CategoryHistogram>();
  r.clarity = j.at("clarity").get<double>();
  r.completeness = j.at("completeness").get<double>();
  r.testability = j.at("testability").get<double>();
  r.consistency = j.at("consistency").get<double>();
  r.semantic_alignment = j.at("semantic_alignment").get<double>();
  r.ops = j.at("ops").get<OpCounts>();
}

void to_json(json& j, const UpdatedRequirementRow& r) {
  j = {{"requirement_id", r.requirement_id}, {"cycle", r.cycle},
       {"prior_text", r.prior_text},         {"updated_text", r.updated_text},
       {"action_applied", to_string(r.action_applied)}, {"reviewer", r.reviewer}};
}

void from_json(const json& j, UpdatedRequirementRow& r) {
  r.requirement_id = j.at("requirement_id").get<std::string>();
  r.cycle = j.at("cycle").get<std::uint32_t>();
  r.prior_text = j.at("prior_text").get<std::string>();
  r.updated_text = j.at("updated_text").get<std::string>();
  r.action_applied = enum_at<RecommendationAction>(j, "action_applied", parse_action);
  r.reviewer = j.at("reviewer").get<std::string>();
}

void to_json(json& j, const SlotRef& s) { j = {{"artefact_id", s.artefact_id}, {"index", s.index}}; }

void from_json(const json& j, SlotRef& s) {
  s.artefact_id = j.at("artefact_id").get<std::string>();
  s.index = j.at("index").get<std::size_t>();
}

void to_json(json& j, const SlotEdit& e) {
  j = {{"kind", to_string(e.kind)}, {"slot", e.slot},       {"text", e.text},
       {"new_id", e.new_id},        {"pair_id", e.pair_id}, {"cycle", e.cycle}};
}

void from_json(const json& j, SlotEdit& e) {
  e.kind = enum_at<EditKind>(j, "kind", parse_edit_kind);
  e.slot = j.at("slot").get<SlotRef>();
  e.text = j.at("text").get<std::string>();
  e.new_id = j.at("new_id").get<std::string>();
  e.pair_id = j.at("pair_id").get<std::string>();
  e.cycle = j.at("cycle").get<std::uint32_t>();
}

void to_json(json& j, const Draft& d) {
  j = json::array();
  for (const auto& item : d.items) {
    json slots = json::array();
    for (const auto& s : item.slots) slots.push_back(opt_string(s));
    j.push_back({{"artefact_id", item.artefact_id},
                 {"slots", std::move(slots)},
                 {"origin", to_string(item.origin)},
                 {"source_cycle", item.source_cycle}});
  }
}

void from_json(const json& j, Draft& d) {
  d.items.clear();
  for (const auto& o : j) {
    Draft::Item item;
    item.artefact_id = o.at("artefact_id").get<std::string>();
    for (const auto& s : o.at("slots"))
      item.slots.push_back(s.is_null() ? std::nullopt : std::optional<std::string>(s.get<std::string>()));
    item.origin = enum_at<Origin>(o, "origin", parse_origin);
    item.source_cycle = o.at("source_cycle").get<std::uint32_t>();
    d.items.push_back(std::move(item));
  }
}

void to_json(json& j, const CycleState& s) {
  json updates = json::object();
  for (const auto& [cycle, rows] : s.updates) updates[std::to_string(cycle)] = rows;
  j = {{"cycle", s.cycle},
       {"original", s.original},
       {"working", s.working},
       {"derived", s.derived},
       {"reverse", s.reverse},
       {"draft", s.draft},
       {"alignment", s.alignment},
       {"dedup", s.dedup},
       {"queue", s.queue},
       {"scores", s.scores},
       {"history", s.history},
       {"edits", s.edits},
       {"suppressed", s.suppressed},
       {"pinned", s.pinned},
       {"updates", std::move(updates)},
       {"ops", s.ops},
       {"status", to_string(s.status)},
       {"final_review", s.final_review}};
}

void from_json(const json& j, CycleState& s) {
  s.cycle = j.at("cycle").get<std::uint32_t>();
  s.original = j.at("original").get<Corpus>();
  s.working = j.at("working").get<Corpus>();
  s.derived = j.at("derived").get<Corpus>();
  s.reverse = j.at("reverse").get<Corpus>();
  s.draft = j.at("draft").get<Draft>();
  s.alignment = j.at("alignment").get<AlignmentResult>();
  s.dedup = j.at("dedup").get<std::vector<MatchPair>>();
  s.queue = j.at("queue").get<std::vector<Recommendation>>();
  s.scores = j.at("scores").get<std::map<std::string, RubricScores>>();
  s.history = j.at("history").get<std::vector<SummaryRecord>>();
  s.edits = j.at("edits").get<std::vector<SlotEdit>>();
  s.suppressed = j.at("suppressed").get<std::set<std::string>>();
  s.pinned = j.at("pinned").get<std::set<SlotRef>>();
  s.updates.clear();
  for (const auto& [key, rows] : j.at("updates").items())
    s.updates[static_cast<std::uint32_t>(std::stoul(key))] = rows.get<std::vector<UpdatedRequirementRow>>();
  s.ops = j.at("ops").get<OpCounts>();
  s.status = enum_at<SessionStatus>(j, "status", parse_status);
  s.final_review = j.at("final_review").get<bool>();
}

void to_json(json& j, const NegativeValidationReport& r) {
  j = {{"level", r.level},
       {"ambiguity_injection", r.ambiguity_injection},
       {"baseline_histogram", r.baseline_histogram},
       {"degraded_histogram", r.degraded_histogram},
       {"baseline_mean_cosine", r.baseline_mean_cosine},
       {"degraded_mean_cosine", r.degraded_mean_cosine},
       {"baseline_mean_rubric", r.baseline_mean_rubric},
       {"degraded_mean_rubric", r.degraded_mean_rubric},
       {"degraded_mean_category", r.degraded_mean_category},
       {"pass", r.pass},
       {"reason", r.reason}};
}

}  // namespace qeloop
