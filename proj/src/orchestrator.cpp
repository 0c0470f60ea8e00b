#include "qeloop/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "qeloop/error.hpp"
#include "qeloop/strings.hpp"

namespace qeloop {

std::string_view to_string(RecommendationAction a) {
  switch (a) {
    case RecommendationAction::Merge: return "Merge";
    case RecommendationAction::Refine: return "Refine";
    case RecommendationAction::KeepDistinct: return "KeepDistinct";
    case RecommendationAction::AddCoverage: return "AddCoverage";
  }
  return "Refine";
}

std::string_view to_string(PairScope s) { return s == PairScope::Cross ? "cross" : "intra"; }

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::AwaitingReview: return "AwaitingReview";
    case SessionStatus::Running: return "Running";
    case SessionStatus::Converged: return "Converged";
    case SessionStatus::CycleLimit: return "CycleLimit";
  }
  return "AwaitingReview";
}

std::string_view to_string(EditKind k) {
  switch (k) {
    case EditKind::Replace: return "Replace";
    case EditKind::Remove: return "Remove";
    case EditKind::Pin: return "Pin";
    case EditKind::Extract: return "Extract";
  }
  return "Replace";
}

std::string_view to_string(SlotSource s) {
  switch (s) {
    case SlotSource::Original: return "original";
    case SlotSource::Reverse: return "reverse";
    case SlotSource::Edited: return "edited";
    case SlotSource::Removed: return "removed";
    case SlotSource::Coverage: return "coverage";
  }
  return "original";
}

std::optional<RecommendationAction> parse_action(std::string_view name) {
  for (auto a : {RecommendationAction::Merge, RecommendationAction::Refine, RecommendationAction::KeepDistinct,
                 RecommendationAction::AddCoverage})
    if (to_string(a) == name) return a;
  return std::nullopt;
}

std::optional<PairScope> parse_scope(std::string_view name) {
  if (name == "cross") return PairScope::Cross;
  if (name == "intra") return PairScope::Intra;
  return std::nullopt;
}

std::optional<SessionStatus> parse_status(std::string_view name) {
  for (auto s : {SessionStatus::AwaitingReview, SessionStatus::Running, SessionStatus::Converged,
                 SessionStatus::CycleLimit})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

std::optional<EditKind> parse_edit_kind(std::string_view name) {
  for (auto k : {EditKind::Replace, EditKind::Remove, EditKind::Pin, EditKind::Extract})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

void CategoryHistogram::add(MatchCategory c) {
  switch (c) {
    case MatchCategory::NoMatch: ++no_match; break;
    case MatchCategory::Low: ++low; break;
    case MatchCategory::Medium: ++medium; break;
    case MatchCategory::High: ++high; break;
  }
}

double CategoryHistogram::mean_ordinal() const {
  if (total() == 0) return 0.0;
  return static_cast<double>(low + 2 * medium + 3 * high) / static_cast<double>(total());
}

CategoryHistogram histogram_of(const AlignmentResult& alignment) {
  CategoryHistogram h;
  for (const auto& p : alignment.pairs) h.add(p.category);
  return h;
}

double SummaryRecord::mean_rubric() const {
  return (clarity + completeness + testability + consistency + semantic_alignment) / 5.0;
}

// ---------------------------------------------------------------------------
// Draft

Draft::Item* Draft::find(std::string_view artefact_id) {
  for (auto& it : items)
    if (it.artefact_id == artefact_id) return &it;
  return nullptr;
}

const Draft::Item* Draft::find(std::string_view artefact_id) const {
  for (const auto& it : items)
    if (it.artefact_id == artefact_id) return &it;
  return nullptr;
}

namespace {

std::vector<std::optional<std::string>> slots_of(const std::string& body) {
  std::vector<std::optional<std::string>> out;
  for (auto& s : split_segments(body)) out.emplace_back(std::move(s));
  return out;
}

std::string with_terminal(std::string_view s) {
  std::string out(str::trim(s));
  if (!out.empty() && out.back() != '.' && out.back() != '!' && out.back() != '?') out += '.';
  return out;
}

}  // namespace

Draft make_draft(const Corpus& original, const Corpus& working) {
  Draft d;
  for (const auto& oa : original.artefacts) {
    Draft::Item item{oa.id, {}, oa.origin, oa.source_cycle};
    const auto n = split_segments(oa.body).size();
    item.slots.assign(n, std::nullopt);
    if (const auto* wa = working.find(oa.id)) {
      auto ws = split_segments(wa->body);
      for (std::size_t i = 0; i < n && i < ws.size(); ++i) item.slots[i] = ws[i];
      for (std::size_t i = n; i < ws.size() && n > 0; ++i) *item.slots[n - 1] += " " + ws[i];
      item.origin = wa->origin;
      item.source_cycle = wa->source_cycle;
    }
    d.items.push_back(std::move(item));
  }
  for (const auto& wa : working.artefacts) {
    if (original.find(wa.id)) continue;
    d.items.push_back({wa.id, slots_of(wa.body), wa.origin, wa.source_cycle});
  }
  return d;
}

Corpus render_draft(const Draft& draft, std::string project_id) {
  Corpus c{std::move(project_id), ArtefactKind::Requirement, {}};
  for (const auto& item : draft.items) {
    std::vector<std::string> texts;
    for (const auto& s : item.slots)
      if (s && str::has_word_byte(*s)) texts.push_back(with_terminal(*s));
    if (texts.empty()) continue;
    Artefact a;
    a.id = item.artefact_id;
    a.kind = ArtefactKind::Requirement;
    a.body = str::join(texts, " ");
    a.origin = item.origin;
    a.source_cycle = item.origin == Origin::Original ? 0 : item.source_cycle;
    c.artefacts.push_back(std::move(a));
  }
  return c;
}

std::pair<std::string, std::string> apply_edit(Draft& draft, const SlotEdit& edit, std::uint32_t cycle) {
  auto* item = draft.find(edit.slot.artefact_id);
  if (!item || edit.slot.index >= item->slots.size())
    throw Error(Errc::InvalidDecision, edit.pair_id, "slot " + edit.slot.id() + " does not exist");
  auto& slot = item->slots[edit.slot.index];
  const std::string prior = slot.value_or("");
  switch (edit.kind) {
    case EditKind::Replace:
      slot = edit.text;
      return {prior, edit.text};
    case EditKind::Remove:
      slot.reset();
      return {prior, ""};
    case EditKind::Pin:
      return {prior, prior};
    case EditKind::Extract: {
      const auto live = std::count_if(item->slots.begin(), item->slots.end(),
                                      [](const auto& s) { return s.has_value(); });
      if (slot && live > 1) slot.reset();
      if (auto* existing = draft.find(edit.new_id)) {
        existing->slots = {edit.text};
      } else {
        draft.items.push_back({edit.new_id, {edit.text}, Origin::Unified, cycle});
      }
      return {prior, edit.text};
    }
  }
  return {prior, prior};
}

bool check_convergence(const std::vector<SummaryRecord>& history, const ConvergenceConfig& cfg) {
  if (history.size() >= cfg.max_cycles) return true;
  if (history.size() < 2) return false;
  const auto& a = history[history.size() - 2];
  const auto& b = history.back();
  return std::abs(b.mean_rubric() - a.mean_rubric()) < cfg.rubric_delta &&
         std::abs(b.mean_cosine - a.mean_cosine) < cfg.cosine_delta;
}

Thresholds PipelineContext::thresholds_for(ArtefactKind kind) const {
  const auto it = thresholds.find(kind);
  return it == thresholds.end() ? Thresholds{} : it->second;
}

PipelineContext make_mock_context(ArtefactKind derived_kind) {
  PipelineContext ctx;
  ctx.embedder = make_hash_embedder(ctx.lex.stopwords);
  ctx.generator = std::make_shared<Generator>(std::make_shared<MockGenerationProvider>(ctx.lex));
  ctx.rubric = std::make_shared<HeuristicRubric>(ctx.lex);
  ctx.derived_kind = derived_kind;
  return ctx;
}

// ---------------------------------------------------------------------------
// Review queue

std::string cross_pair_id(const MatchPair& p) {
  return "cross:" + p.left.id() + ":" + (p.right ? p.right->id() : std::string("-"));
}

std::string intra_pair_id(const MatchPair& p) { return "intra:" + p.left.id() + ":" + (p.right ? p.right->id() : "-"); }

namespace {

std::vector<std::string> intersect(const TokenSet& a, const TokenSet& b) {
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::string list_or_none(const std::vector<std::string>& v) { return v.empty() ? "none" : str::join(v, ", "); }

std::string suggestion(std::optional<RecommendationAction> action) {
  return action ? "Suggested action: " + std::string(to_string(*action)) + "." : std::string("Aligned; no action.");
}

std::string testing_impact(PairScope scope, std::optional<RecommendationAction> action, MatchCategory c) {
  if (!action) return "Derived tests express this requirement sentence; no change needed.";
  if (scope == PairScope::Intra) {
    return action == RecommendationAction::Merge
               ? "Duplicate requirements yield redundant tests; merging removes duplicated test effort."
               : "Related requirements may share tests; confirm that both need separate coverage.";
  }
  if (action == RecommendationAction::AddCoverage)
    return "No derived test expresses this requirement sentence; coverage must be added.";
  return c == MatchCategory::Medium
             ? "Derived tests only partly express this requirement; tighten the affected steps and expectations."
             : "Derived tests drift from this requirement; regenerate or rewrite the affected tests.";
}

}  // namespace

std::optional<RecommendationAction> cross_action(MatchCategory c) {
  switch (c) {
    case MatchCategory::High: return std::nullopt;
    case MatchCategory::Medium:
    case MatchCategory::Low: return RecommendationAction::Refine;
    case MatchCategory::NoMatch: return RecommendationAction::AddCoverage;
  }
  return std::nullopt;
}

Recommendation make_recommendation(PairScope scope, const MatchPair& p, std::optional<RecommendationAction> action,
                                   bool human, const Lexicons& lex) {
  Recommendation r;
  r.scope = scope;
  r.pair = p;
  r.action = action.value_or(RecommendationAction::KeepDistinct);
  r.requires_human = human;
  r.pair_id = scope == PairScope::Cross ? cross_pair_id(p) : intra_pair_id(p);
  const auto lp = extract_entity_verbs(p.left.text, lex);
  if (p.right) {
    const auto rp = extract_entity_verbs(p.right->text, lex);
    r.shared_entities = intersect(lp.entities, rp.entities);
    r.shared_verbs = intersect(lp.verbs, rp.verbs);
  }
  const std::string rid = p.right ? p.right->id() : "-";
  r.rationale = p.left.id() + " vs " + rid + ": cosine " + str::fixed(p.cosine) + " (" +
                std::string(to_string(p.category)) + "), jaccard " + str::fixed(p.jaccard) + ". ";
  if (p.right) {
    r.rationale += "Shared entities: " + list_or_none(r.shared_entities) + ". Shared verbs: " +
                   list_or_none(r.shared_verbs) + ". Left: \"" + p.left.text + "\" Right: \"" + p.right->text +
                   "\". " + suggestion(action);
  } else {
    r.rationale += "No counterpart reached the Low threshold. Left: \"" + p.left.text +
                   "\". " + suggestion(action);
  }
  r.testing_impact = testing_impact(scope, action, p.category);
  return r;
}

std::vector<Recommendation> build_review_queue(const AlignmentResult& alignment, const std::vector<MatchPair>& dedup,
                                               const Thresholds& t, const Lexicons& lex) {
  std::vector<Recommendation> out;
  for (const auto& p : alignment.pairs) {
    const auto c = p.right ? classify(p.cosine, t) : MatchCategory::NoMatch;
    if (const auto a = cross_action(c)) out.push_back(make_recommendation(PairScope::Cross, p, a, c == MatchCategory::Medium, lex));
  }
  for (const auto& p : dedup) {
    const auto c = classify(p.cosine, t);
    if (c == MatchCategory::High)
      out.push_back(make_recommendation(PairScope::Intra, p, RecommendationAction::Merge, false, lex));
    else if (c == MatchCategory::Medium)
      out.push_back(make_recommendation(PairScope::Intra, p, RecommendationAction::KeepDistinct, true, lex));
  }
  std::stable_sort(out.begin(), out.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.pair.cosine != b.pair.cosine) return a.pair.cosine > b.pair.cosine;
    return a.pair_id < b.pair_id;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Cycle

CycleState initial_state(Corpus original, Corpus working, PipelineContext& ctx, std::optional<Corpus> derived) {
  if (original.empty()) throw Error(Errc::EmptyCorpus, original.project_id, "original corpus is empty");
  if (working.empty()) throw Error(Errc::EmptyCorpus, working.project_id, "working corpus is empty");
  CycleState s;
  s.ops = ctx.generator->stats().snapshot();
  s.draft = make_draft(original, working);
  s.original = std::move(original);
  s.working = std::move(working);
  s.derived = derived ? std::move(*derived) : ctx.generator->forward(s.working, ctx.derived_kind);
  return s;
}

CycleState run_cycle(CycleState state, PipelineContext& ctx) {
  const auto& cfg = ctx.convergence;
  if (state.cycle > cfg.max_cycles)
    throw Error(Errc::CycleLimitExceeded, std::to_string(state.cycle),
                "max_cycles is " + std::to_string(cfg.max_cycles));
  if (state.working.empty()) throw Error(Errc::EmptyCorpus, state.working.project_id, "working corpus is empty");

  auto& emb = *ctx.embedder;
  state.reverse = ctx.generator->reverse(state.derived, state.cycle);
  state.reverse.project_id = state.original.project_id;
  const auto t = ctx.thresholds_for(state.derived.kind);

  const auto left = segment_corpus(state.original);
  const auto right = segment_corpus(state.reverse);
  state.alignment = align_cross(left, right, emb, t, ctx.lex.stopwords);
  state.dedup = left.size() >= 2 ? dedup_intra(left, emb, t, ctx.lex.stopwords) : std::vector<MatchPair>{};

  state.queue.clear();
  for (auto& item : build_review_queue(state.alignment, state.dedup, t, ctx.lex)) {
    if (item.scope == PairScope::Intra && state.suppressed.contains(item.pair_id)) continue;
    if (item.scope == PairScope::Cross && state.pinned.contains(SlotRef{item.pair.left.artefact_id, item.pair.left.index}))
      continue;
    state.queue.push_back(std::move(item));
  }

  // Per reverse artefact: cosine mass of its matched segments over its size.
  std::unordered_map<std::string, double> matched_cosine;
  std::unordered_map<std::string, std::size_t> seg_count;
  for (const auto& s : right) ++seg_count[s.artefact_id];
  for (const auto& p : state.alignment.pairs)
    if (p.right) matched_cosine[p.right->artefact_id] += p.cosine;

  const int consistency = score_consistency(state.reverse, emb, t, ctx.lex);
  state.scores.clear();
  SummaryRecord rec;
  rec.cycle = state.cycle;
  rec.mean_cosine = state.alignment.mean_cosine;
  rec.histogram = histogram_of(state.alignment);
  for (const auto& a : state.reverse.artefacts) {
    const auto base = ctx.rubric->score(a);
    RubricScores rs{base.clarity, base.completeness, base.testability, consistency, 1, ctx.rubric->id()};
    const auto n = seg_count[a.id];
    rs.semantic_alignment = alignment_score(n == 0 ? 0.0 : matched_cosine[a.id] / static_cast<double>(n));
    rec.clarity += rs.clarity;
    rec.completeness += rs.completeness;
    rec.testability += rs.testability;
    rec.consistency += rs.consistency;
    rec.semantic_alignment += rs.semantic_alignment;
    state.scores[a.id] = std::move(rs);
  }
  if (const auto n = static_cast<double>(state.reverse.size()); n > 0) {
    rec.clarity /= n;
    rec.completeness /= n;
    rec.testability /= n;
    rec.consistency /= n;
    rec.semantic_alignment /= n;
  }
  const auto now = ctx.generator->stats().snapshot();
  rec.ops = {now.forward - state.ops.forward, now.reverse - state.ops.reverse, now.judge - state.ops.judge};
  state.ops = now;

  state.history.push_back(rec);
  ++state.cycle;

  if (state.queue.empty()) {
    state.status = SessionStatus::Converged;
    state.final_review = false;
  } else {
    state.status = SessionStatus::AwaitingReview;
    state.final_review = check_convergence(state.history, cfg);
  }
  return state;
}

// ---------------------------------------------------------------------------
// Decisions

namespace {

struct Resolved {
  std::vector<SlotEdit> edits;
  const Recommendation* item = nullptr;
  const ReviewDecision* decision = nullptr;
};

SlotRef slot_of(const Segment& s) { return {s.artefact_id, s.index}; }

Resolved resolve(const Recommendation& item, const ReviewDecision& d, std::uint32_t cycle) {
  Resolved r{{}, &item, &d};
  auto invalid = [&](const std::string& why) { throw Error(Errc::InvalidDecision, d.pair_id, why); };
  auto edit = [&](EditKind k, const Segment& s, std::string text = {}) {
    r.edits.push_back({k, slot_of(s), std::move(text), "", d.pair_id, cycle});
  };
  const auto& p = item.pair;
  if (item.scope == PairScope::Cross) {
    switch (d.verdict) {
      case RecommendationAction::Refine:
        if (d.edited_text) edit(EditKind::Replace, p.left, *d.edited_text);
        break;
      case RecommendationAction::Merge:
        if (!d.edited_text && !p.right) invalid("Merge needs a counterpart or edited text");
        edit(EditKind::Replace, p.left, d.edited_text ? *d.edited_text : p.right->text);
        break;
      case RecommendationAction::KeepDistinct:
        edit(EditKind::Pin, p.left);
        break;
      case RecommendationAction::AddCoverage:
        edit(EditKind::Extract, p.left, d.edited_text ? *d.edited_text : p.left.text);
        break;
    }
  } else {
    if (!p.right) invalid("intra pair without a second segment");
    switch (d.verdict) {
      case RecommendationAction::Merge:
        edit(EditKind::Remove, *p.right);
        if (d.edited_text) edit(EditKind::Replace, p.left, *d.edited_text);
        break;
      case RecommendationAction::KeepDistinct:
        edit(EditKind::Pin, *p.right);
        break;
      case RecommendationAction::Refine:
        if (d.edited_text) edit(EditKind::Replace, *p.right, *d.edited_text);
        break;
      case RecommendationAction::AddCoverage:
        invalid("AddCoverage applies to cross-set pairs only");
    }
  }
  return r;
}

std::string coverage_id(const Draft& draft, const std::vector<SlotEdit>& edits, const std::string& artefact_id) {
  for (int k = 1;; ++k) {
    auto id = artefact_id + "-cov" + std::to_string(k);
    const bool taken = draft.find(id) || std::any_of(edits.begin(), edits.end(),
                                                     [&](const SlotEdit& e) { return e.new_id == id; });
    if (!taken) return id;
  }
}

}  // namespace

CycleState apply_decisions(const CycleState& state, const std::vector<ReviewDecision>& decisions) {
  std::unordered_map<std::string, const Recommendation*> by_id;
  for (const auto& item : state.queue) by_id[item.pair_id] = &item;

  const auto decided_cycle = static_cast<std::uint32_t>(state.history.size());
  std::set<std::string> seen;
  std::vector<Resolved> resolved;
  for (const auto& d : decisions) {
    const auto it = by_id.find(d.pair_id);
    if (it == by_id.end()) throw Error(Errc::UnknownPairId, d.pair_id, "not in the current review queue");
    if (!seen.insert(d.pair_id).second)
      throw Error(Errc::ConflictingDecisions, d.pair_id, "more than one decision for this pair");
    if (d.edited_text && str::trim(*d.edited_text).empty())
      throw Error(Errc::InvalidDecision, d.pair_id, "edited text is empty");
    resolved.push_back(resolve(*it->second, d, decided_cycle));
  }
  if (decisions.empty()) return state;

  CycleState s = state;
  auto& rows = s.updates[decided_cycle];
  for (auto& r : resolved) {
    for (auto& e : r.edits) {
      if (e.kind == EditKind::Extract) {
        // A lone sentence is rewritten in place; extracting it would duplicate the requirement.
        const auto* item = s.draft.find(e.slot.artefact_id);
        const auto live = item ? std::count_if(item->slots.begin(), item->slots.end(),
                                               [](const auto& slot) { return slot.has_value(); })
                               : 0;
        if (live > 1)
          e.new_id = coverage_id(s.draft, s.edits, e.slot.artefact_id);
        else
          e.kind = EditKind::Replace;
      }
      auto [prior, updated] = apply_edit(s.draft, e, decided_cycle);
      rows.push_back({e.kind == EditKind::Extract ? e.new_id : e.slot.artefact_id, decided_cycle, std::move(prior),
                      std::move(updated), r.decision->verdict, r.decision->reviewer});
      if (e.kind == EditKind::Pin && r.item->scope == PairScope::Cross) s.pinned.insert(e.slot);
      s.edits.push_back(e);
    }
    if (r.item->scope == PairScope::Intra) s.suppressed.insert(r.item->pair_id);
  }
  s.working = render_draft(s.draft, s.original.project_id);
  return s;
}

// ---------------------------------------------------------------------------
// Synthesis

UnifiedResult synthesize_unified(const Corpus& original, const Corpus& reverse, const AlignmentResult& alignment,
                                 const std::vector<SlotEdit>& edits, RubricBackend& rubric, std::uint32_t cycle) {
  (void)reverse;  // reverse texts reach synthesis through the alignment pairs
  UnifiedResult out;
  out.draft = make_draft(original, original);

  std::map<SlotRef, SlotSource> source;
  std::map<SlotRef, std::size_t> order;
  for (const auto& s : segment_corpus(original)) {
    source[slot_of(s)] = SlotSource::Original;
    order.emplace(slot_of(s), order.size());
  }

  std::unordered_map<std::string, int> robustness;
  auto robust = [&](const std::string& text) {
    if (auto it = robustness.find(text); it != robustness.end()) return it->second;
    Artefact a;
    a.id = "segment";
    a.kind = ArtefactKind::Requirement;
    a.body = text;
    return robustness[text] = rubric.score(a).robustness();
  };

  for (const auto& p : alignment.pairs) {
    if (!p.right) continue;
    auto* item = out.draft.find(p.left.artefact_id);
    if (!item || p.left.index >= item->slots.size()) continue;
    if (robust(p.right->text) > robust(p.left.text)) {
      item->slots[p.left.index] = p.right->text;
      source[slot_of(p.left)] = SlotSource::Reverse;
    }
  }

  // Coverage requirements go last, in original slot order.
  std::vector<const SlotEdit*> ordered;
  for (const auto& e : edits)
    if (e.kind != EditKind::Extract) ordered.push_back(&e);
  std::vector<const SlotEdit*> extracts;
  for (const auto& e : edits)
    if (e.kind == EditKind::Extract) extracts.push_back(&e);
  std::stable_sort(extracts.begin(), extracts.end(), [&](const SlotEdit* a, const SlotEdit* b) {
    const auto ia = order.contains(a->slot) ? order[a->slot] : order.size();
    const auto ib = order.contains(b->slot) ? order[b->slot] : order.size();
    return ia < ib;
  });
  ordered.insert(ordered.end(), extracts.begin(), extracts.end());

  std::vector<std::string> coverage_ids;
  for (const auto* e : ordered) {
    apply_edit(out.draft, *e, cycle);
    switch (e->kind) {
      case EditKind::Replace: source[e->slot] = SlotSource::Edited; break;
      case EditKind::Remove: source[e->slot] = SlotSource::Removed; break;
      case EditKind::Pin: break;
      case EditKind::Extract: {
        const auto* item = out.draft.find(e->slot.artefact_id);
        if (item && e->slot.index < item->slots.size() && !item->slots[e->slot.index])
          source[e->slot] = SlotSource::Removed;
        coverage_ids.push_back(e->new_id);
        break;
      }
    }
  }

  for (auto& item : out.draft.items) {
    item.origin = Origin::Unified;
    item.source_cycle = cycle;
  }
  out.corpus = render_draft(out.draft, original.project_id);

  for (const auto& item : out.draft.items) {
    if (std::find(coverage_ids.begin(), coverage_ids.end(), item.artefact_id) != coverage_ids.end()) {
      out.provenance.push_back({item.artefact_id, SlotSource::Coverage});
      continue;
    }
    for (std::size_t i = 0; i < item.slots.size(); ++i) {
      const SlotRef ref{item.artefact_id, i};
      const auto it = source.find(ref);
      out.provenance.push_back({ref.id(), it == source.end() ? SlotSource::Original : it->second});
    }
  }
  return out;
}

CycleState advance(const CycleState& state, const std::vector<ReviewDecision>& decisions, PipelineContext& ctx) {
  if (state.status != SessionStatus::AwaitingReview)
    throw Error(Errc::InvalidDecision, std::string(to_string(state.status)), "session is not awaiting review");
  auto s = apply_decisions(state, decisions);
  const auto last_cycle = static_cast<std::uint32_t>(s.history.size());
  auto unified = synthesize_unified(s.original, s.reverse, s.alignment, s.edits, *ctx.rubric, last_cycle);
  s.draft = std::move(unified.draft);
  s.working = std::move(unified.corpus);

  if (s.final_review || s.cycle > ctx.convergence.max_cycles) {
    s.final_review = false;
    s.queue.clear();
    s.status = s.history.size() >= ctx.convergence.max_cycles ? SessionStatus::CycleLimit : SessionStatus::Converged;
    return s;
  }
  s.derived = ctx.generator->forward(s.working, s.derived.kind);
  return run_cycle(std::move(s), ctx);
}

CycleState run_loop(Corpus original, Corpus working, PipelineContext& ctx, const Reviewer& reviewer) {
  auto s = run_cycle(initial_state(std::move(original), std::move(working), ctx), ctx);
  while (s.status == SessionStatus::AwaitingReview) s = advance(s, reviewer(s), ctx);
  return s;
}

std::vector<ReviewDecision> accept_all(const CycleState& state, std::string reviewer, const Clock& clock) {
  std::vector<ReviewDecision> out;
  for (const auto& item : state.queue) {
    ReviewDecision d{item.pair_id, item.action, std::nullopt, reviewer, clock ? clock() : std::string()};
    if (item.scope == PairScope::Cross && item.action == RecommendationAction::Refine) d.edited_text = item.pair.left.text;
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Negative validation

NegativeValidationReport negative_validation(const Corpus& c, const DegradationSpec& spec, PipelineContext& ctx,
                                             double min_level) {
  NegativeValidationReport r;
  r.level = spec.level;
  r.ambiguity_injection = spec.ambiguity_injection;

  const auto base = run_cycle(initial_state(c, c, ctx), ctx);
  const auto deg = run_cycle(initial_state(c, degrade(c, spec, ctx.lex), ctx), ctx);
  const auto& b = base.history.back();
  const auto& g = deg.history.back();
  r.baseline_histogram = b.histogram;
  r.degraded_histogram = g.histogram;
  r.baseline_mean_cosine = b.mean_cosine;
  r.degraded_mean_cosine = g.mean_cosine;
  r.baseline_mean_rubric = b.mean_rubric();
  r.degraded_mean_rubric = g.mean_rubric();
  r.degraded_mean_category = g.histogram.mean_ordinal();

  if (spec.level <= 0.0) {
    r.reason = "no degradation";
    return r;
  }
  if (spec.level < min_level) {
    r.reason = "degradation level " + str::fixed(spec.level, 2) + " is below the minimum " + str::fixed(min_level, 2);
    return r;
  }
  const bool category_ok = r.degraded_mean_category <= 1.0;
  const bool rubric_ok = r.degraded_mean_rubric < r.baseline_mean_rubric;
  r.pass = category_ok && rubric_ok;
  if (r.pass) {
    r.reason = "degraded input detected";
  } else {
    std::vector<std::string> why;
    if (!category_ok) why.push_back("degraded mean category above Low");
    if (!rubric_ok) why.push_back("degraded mean rubric not below baseline");
    r.reason = str::join(why, "; ");
  }
  return r;
}

}  // namespace qeloop
