#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qeloop/artefact.hpp"
#include "qeloop/clock.hpp"
#include "qeloop/embedding.hpp"
#include "qeloop/generation.hpp"
#include "qeloop/rubric.hpp"
#include "qeloop/similarity.hpp"

namespace qeloop {

enum class RecommendationAction { Merge, Refine, KeepDistinct, AddCoverage };
enum class PairScope { Cross, Intra };
enum class SessionStatus { AwaitingReview, Running, Converged, CycleLimit };

std::string_view to_string(RecommendationAction a);
std::string_view to_string(PairScope s);
std::string_view to_string(SessionStatus s);
std::optional<RecommendationAction> parse_action(std::string_view name);
std::optional<PairScope> parse_scope(std::string_view name);
std::optional<SessionStatus> parse_status(std::string_view name);

struct Recommendation {
  std::string pair_id;
  PairScope scope = PairScope::Cross;
  MatchPair pair;
  RecommendationAction action = RecommendationAction::Refine;
  bool requires_human = false;
  std::string rationale;
  std::string testing_impact;
  std::vector<std::string> shared_entities;
  std::vector<std::string> shared_verbs;
};

struct ReviewDecision {
  std::string pair_id;
  RecommendationAction verdict = RecommendationAction::Refine;
  std::optional<std::string> edited_text;
  std::string reviewer;
  std::string decided_at;
};

struct CategoryHistogram {
  std::size_t no_match = 0;
  std::size_t low = 0;
  std::size_t medium = 0;
  std::size_t high = 0;

  void add(MatchCategory c);
  std::size_t total() const { return no_match + low + medium + high; }
  // Mean category ordinal (NoMatch = 0 ... High = 3); 0 when empty.
  double mean_ordinal() const;
  friend bool operator==(const CategoryHistogram&, const CategoryHistogram&) = default;
};

CategoryHistogram histogram_of(const AlignmentResult& alignment);

struct SummaryRecord {
  std::uint32_t cycle = 0;
  double mean_cosine = 0.0;
  CategoryHistogram histogram;
  double clarity = 0.0;
  double completeness = 0.0;
  double testability = 0.0;
  double consistency = 0.0;
  double semantic_alignment = 0.0;
  OpCounts ops;

  // Mean of the five dimension means.
  double mean_rubric() const;
  friend bool operator==(const SummaryRecord&, const SummaryRecord&) = default;
};

struct UpdatedRequirementRow {
  std::string requirement_id;
  std::uint32_t cycle = 0;
  std::string prior_text;
  std::string updated_text;
  RecommendationAction action_applied = RecommendationAction::Refine;
  std::string reviewer;

  friend bool operator==(const UpdatedRequirementRow&, const UpdatedRequirementRow&) = default;
};

// A sentence position in the original corpus. Decisions address slots so
// that they stay meaningful when the working text changes between cycles.
struct SlotRef {
  std::string artefact_id;
  std::size_t index = 0;

  std::string id() const { return artefact_id + "#" + std::to_string(index); }
  friend auto operator<=>(const SlotRef&, const SlotRef&) = default;
};

enum class EditKind { Replace, Remove, Pin, Extract };
std::string_view to_string(EditKind k);
std::optional<EditKind> parse_edit_kind(std::string_view name);

// A resolved decision. Extract moves the slot's text into a new requirement
// new_id ("<artefact>-cov<k>") and vacates the slot; AddCoverage on an
// artefact with a single live sentence resolves to Replace instead.
struct SlotEdit {
  EditKind kind = EditKind::Replace;
  SlotRef slot;
  std::string text;
  std::string new_id;
  std::string pair_id;
  std::uint32_t cycle = 0;

  friend bool operator==(const SlotEdit&, const SlotEdit&) = default;
};

// Per-slot texts of the corpus under refinement plus appended requirements.
struct Draft {
  struct Item {
    std::string artefact_id;
    std::vector<std::optional<std::string>> slots;  // nullopt: removed
    Origin origin = Origin::Original;
    std::uint32_t source_cycle = 0;

    friend bool operator==(const Item&, const Item&) = default;
  };
  std::vector<Item> items;

  Item* find(std::string_view artefact_id);
  const Item* find(std::string_view artefact_id) const;
  friend bool operator==(const Draft&, const Draft&) = default;
};

// Slots of `working` artefacts that share an id with an `original` artefact
// line up by sentence index; other working artefacts are appended.
Draft make_draft(const Corpus& original, const Corpus& working);

// Sentences joined by a space, '.' added where terminal punctuation is
// missing; artefacts whose slots are all removed are omitted.
Corpus render_draft(const Draft& draft, std::string project_id);

// Applies one edit; returns the (prior, updated) texts of the affected slot.
std::pair<std::string, std::string> apply_edit(Draft& draft, const SlotEdit& edit, std::uint32_t cycle);

struct ConvergenceConfig {
  double rubric_delta = 0.1;
  double cosine_delta = 0.02;
  std::uint32_t max_cycles = 3;
};

// True iff the history has reached max_cycles, or its last two records
// differ by less than both deltas.
bool check_convergence(const std::vector<SummaryRecord>& history, const ConvergenceConfig& cfg);

struct PipelineContext {
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<Generator> generator;
  std::shared_ptr<RubricBackend> rubric;
  Lexicons lex = Lexicons::defaults();
  std::map<ArtefactKind, Thresholds> thresholds;  // missing kinds use defaults
  ConvergenceConfig convergence;
  ArtefactKind derived_kind = ArtefactKind::TestCase;
  Clock clock = system_clock();

  Thresholds thresholds_for(ArtefactKind kind) const;
};

// Mock generation, hash embeddings and heuristic rubric.
PipelineContext make_mock_context(ArtefactKind derived_kind = ArtefactKind::TestCase);

struct CycleState {
  std::uint32_t cycle = 1;  // next cycle to run; history.size() + 1
  Corpus original;
  Corpus working;
  Corpus derived;
  Corpus reverse;
  Draft draft;
  AlignmentResult alignment;
  std::vector<MatchPair> dedup;
  std::vector<Recommendation> queue;
  std::map<std::string, RubricScores> scores;  // per reverse artefact
  std::vector<SummaryRecord> history;
  std::vector<SlotEdit> edits;                 // accumulated, in decision order
  std::set<std::string> suppressed;            // decided intra pair ids
  std::set<SlotRef> pinned;                    // cross slots kept as they are
  std::map<std::uint32_t, std::vector<UpdatedRequirementRow>> updates;  // by cycle decided
  OpCounts ops;
  SessionStatus status = SessionStatus::AwaitingReview;
  bool final_review = false;  // next advance applies decisions and stops
};

// Rationale shape: both segment ids, cosine and jaccard to 4 decimals,
// shared entities/verbs and both texts.
std::vector<Recommendation> build_review_queue(const AlignmentResult& alignment, const std::vector<MatchPair>& dedup,
                                               const Thresholds& t, const Lexicons& lex);

// Cross action by category: High none, Medium/Low Refine, NoMatch AddCoverage.
std::optional<RecommendationAction> cross_action(MatchCategory c);

// Without an action the rationale reads "Aligned; no action." and
// Recommendation::action is meaningless.
Recommendation make_recommendation(PairScope scope, const MatchPair& p, std::optional<RecommendationAction> action,
                                   bool requires_human, const Lexicons& lex);

std::string cross_pair_id(const MatchPair& p);
std::string intra_pair_id(const MatchPair& p);

// Fresh state; derived is generated from working when not supplied.
CycleState initial_state(Corpus original, Corpus working, PipelineContext& ctx, std::optional<Corpus> derived = {});

// Reverse-generates, aligns, builds the queue, scores and appends one
// summary. Throws CycleLimitExceeded past max_cycles, EmptyCorpus when
// working is empty.
CycleState run_cycle(CycleState state, PipelineContext& ctx);

// Validates all decisions against the current queue before changing
// anything (UnknownPairId, ConflictingDecisions, InvalidDecision), then
// applies them to the draft and re-renders working.
CycleState apply_decisions(const CycleState& state, const std::vector<ReviewDecision>& decisions);

enum class SlotSource { Original, Reverse, Edited, Removed, Coverage };
std::string_view to_string(SlotSource s);

struct SlotProvenance {
  std::string slot_id;  // "<artefact>#<index>" or the coverage id
  SlotSource source = SlotSource::Original;
};

struct UnifiedResult {
  Draft draft;
  Corpus corpus;  // origin = Unified
  std::vector<SlotProvenance> provenance;
};

// Each original slot keeps its text unless its aligned reverse segment has a
// strictly higher clarity + completeness + testability; accumulated edits
// are applied on top, coverage requirements last.
UnifiedResult synthesize_unified(const Corpus& original, const Corpus& reverse, const AlignmentResult& alignment,
                                 const std::vector<SlotEdit>& edits, RubricBackend& rubric, std::uint32_t cycle);

// apply_decisions, synthesis, forward generation and the next cycle. In
// final review the run stops after synthesis with Converged or CycleLimit.
CycleState advance(const CycleState& state, const std::vector<ReviewDecision>& decisions, PipelineContext& ctx);

// Runs until the queue is empty or the loop stops, asking `reviewer` for the
// decisions of every cycle.
using Reviewer = std::function<std::vector<ReviewDecision>(const CycleState&)>;
CycleState run_loop(Corpus original, Corpus working, PipelineContext& ctx, const Reviewer& reviewer);

// Accepts every item: Refine and Merge restore the left text, AddCoverage
// and KeepDistinct as suggested.
std::vector<ReviewDecision> accept_all(const CycleState& state, std::string reviewer, const Clock& clock);

struct NegativeValidationReport {
  double level = 0.0;
  bool ambiguity_injection = false;
  CategoryHistogram baseline_histogram;
  CategoryHistogram degraded_histogram;
  double baseline_mean_cosine = 0.0;
  double degraded_mean_cosine = 0.0;
  double baseline_mean_rubric = 0.0;
  double degraded_mean_rubric = 0.0;
  double degraded_mean_category = 0.0;
  bool pass = false;
  std::string reason;
};

// One cycle on the pristine corpus and one on its degraded copy. Passes when
// the degraded mean category is at most Low and its mean rubric is strictly
// below the baseline.
NegativeValidationReport negative_validation(const Corpus& c, const DegradationSpec& spec, PipelineContext& ctx,
                                             double min_level = 0.5);

}  // namespace qeloop
