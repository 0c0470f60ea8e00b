#pragma once

#include <string>
#include <string_view>

#include "qeloop/artefact.hpp"
#include "qeloop/embedding.hpp"
#include "qeloop/similarity.hpp"
#include "qeloop/text.hpp"

namespace qeloop {

struct RubricScores {
  int clarity = 1;
  int completeness = 1;
  int testability = 1;
  int consistency = 1;
  int semantic_alignment = 1;
  std::string backend_id;

  bool valid() const;
  double mean() const;

  friend bool operator==(const RubricScores&, const RubricScores&) = default;
};

// Per-artefact dimensions a backend scores; consistency and semantic
// alignment are corpus-level and computed separately.
struct ArtefactScores {
  int clarity = 1;
  int completeness = 1;
  int testability = 1;

  int robustness() const { return clarity + completeness + testability; }
};

int clamp_score(int v);

// Lexical features shared by the scorers.
bool has_quantifier(std::string_view text, const Lexicons& lex);
bool has_outcome_clause(std::string_view text, const Lexicons& lex);

// 5, minus one per distinct ambiguity phrase, minus one if any segment runs
// past 40 tokens.
int score_clarity(const Artefact& a, const Lexicons& lex);

// 1 plus one point each for an actor, a verb, a quantity and an outcome
// clause. Requirement only (WrongKind otherwise).
int score_completeness(const Artefact& a, const Lexicons& lex);

// 1 plus one point each for a quantity, an observable outcome, no
// ambiguity phrase, and a single focus (at most one "and"/"or"). The last two
// points need a quantity or an observable outcome to be present at all.
// Requirement only.
int score_testability(const Artefact& a, const Lexicons& lex);

// Corpus-level: 5, minus one per High intra-corpus pair, minus one per pair
// of segments with equal entity sets and opposite polarity.
int score_consistency(const Corpus& c, Embedder& emb, const Thresholds& t, const Lexicons& lex);

// round_half_up(1 + 4m) clamped to [1, 5].
int alignment_score(double mean_cosine);

// Throws EmptyCorpus for an empty side and WrongKind for non-requirements.
int score_semantic_alignment(const Corpus& original, const Corpus& reverse, Embedder& emb, const Thresholds& t,
                             const Lexicons& lex);

class RubricBackend {
 public:
  virtual ~RubricBackend() = default;
  virtual std::string id() const = 0;
  virtual ArtefactScores score(const Artefact& a) = 0;
};

class HeuristicRubric final : public RubricBackend {
 public:
  explicit HeuristicRubric(Lexicons lex = Lexicons::defaults()) : lex_(std::move(lex)) {}
  std::string id() const override { return "heuristic-v1"; }
  ArtefactScores score(const Artefact& a) override;

 private:
  Lexicons lex_;
};

// Metric definitions substituted for {metric_definitions} in judge prompts.
std::string_view rubric_metric_definitions();

// Reads "clarity: N", "completeness: N", "testability: N" lines (any order,
// case-insensitive). Returns nullopt when a metric is missing or out of range.
std::optional<ArtefactScores> parse_judge_scores(std::string_view text);

}  // namespace qeloop
