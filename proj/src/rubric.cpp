#include "qeloop/rubric.hpp"

#include <algorithm>
#include <cmath>

#include "qeloop/error.hpp"
#include "qeloop/strings.hpp"

namespace qeloop {

namespace {

constexpr std::size_t kLongSegmentTokens = 40;

bool any_token_in(const std::vector<std::string>& tokens, const WordSet& set) {
  return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return set.contains(t); });
}

bool has_content(const std::vector<std::string>& tokens, std::size_t from, std::size_t to, const Lexicons& lex) {
  for (std::size_t i = from; i < to; ++i)
    if (!lex.stopwords.contains(tokens[i])) return true;
  return false;
}

const WordSet& conditional_markers() {
  static const WordSet kMarkers = {"if",   "when",  "after",    "once",  "upon",
                                   "unless", "before", "whenever", "while", "until"};
  return kMarkers;
}

void require_requirement(const Artefact& a) {
  if (a.kind != ArtefactKind::Requirement)
    throw Error(Errc::WrongKind, a.id, "expected Requirement, got " + std::string(to_string(a.kind)));
}

}  // namespace

bool RubricScores::valid() const {
  for (int s : {clarity, completeness, testability, consistency, semantic_alignment})
    if (s < 1 || s > 5) return false;
  return true;
}

double RubricScores::mean() const {
  return (clarity + completeness + testability + consistency + semantic_alignment) / 5.0;
}

int clamp_score(int v) { return std::clamp(v, 1, 5); }

bool has_quantifier(std::string_view text, const Lexicons& lex) {
  for (char c : text)
    if ((c >= '0' && c <= '9') || c == '%') return true;
  return any_token_in(tokenize(text), lex.units);
}

bool has_outcome_clause(std::string_view text, const Lexicons& lex) {
  const auto tokens = tokenize(text);
  if (any_token_in(tokens, lex.outcomes)) return true;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!conditional_markers().contains(tokens[i])) continue;
    if (has_content(tokens, 0, i, lex) && has_content(tokens, i + 1, tokens.size(), lex)) return true;
  }
  return false;
}

int score_clarity(const Artefact& a, const Lexicons& lex) {
  int score = 5;
  score -= static_cast<int>(find_phrases(a.body, lex.ambiguity).size());
  const auto segments = split_segments(a.body);
  const bool too_long = std::any_of(segments.begin(), segments.end(),
                                    [](const std::string& s) { return tokenize(s).size() > kLongSegmentTokens; });
  if (too_long) --score;
  return clamp_score(score);
}

int score_completeness(const Artefact& a, const Lexicons& lex) {
  require_requirement(a);
  const auto tokens = tokenize(a.body);
  int score = 1;
  if (any_token_in(tokens, lex.actors)) ++score;
  if (!extract_entity_verbs(a.body, lex).verbs.empty()) ++score;
  if (has_quantifier(a.body, lex)) ++score;
  if (has_outcome_clause(a.body, lex)) ++score;
  return clamp_score(score);
}

int score_testability(const Artefact& a, const Lexicons& lex) {
  require_requirement(a);
  const auto tokens = tokenize(a.body);
  const bool quantified = has_quantifier(a.body, lex);
  const bool observable = any_token_in(tokens, lex.outcomes) || !extract_entity_verbs(a.body, lex).verbs.empty();
  int score = 1;
  if (quantified) ++score;
  if (observable) ++score;
  if (quantified || observable) {
    if (find_phrases(a.body, lex.ambiguity).empty()) ++score;
    const auto chains = std::count_if(tokens.begin(), tokens.end(),
                                      [](const std::string& t) { return t == "and" || t == "or"; });
    if (chains <= 1) ++score;
  }
  return clamp_score(score);
}

int score_consistency(const Corpus& c, Embedder& emb, const Thresholds& t, const Lexicons& lex) {
  const auto segments = segment_corpus(c);
  int score = 5;
  if (segments.size() >= 2) {
    for (const auto& p : dedup_intra(segments, emb, t, lex.stopwords))
      if (p.category == MatchCategory::High) --score;
  }

  struct Polarity {
    TokenSet entities;
    bool negated;
  };
  std::vector<Polarity> pol;
  pol.reserve(segments.size());
  for (const auto& s : segments) {
    Polarity p{extract_entity_verbs(s.text, lex).entities, false};
    for (const auto& n : lex.negations) p.negated |= p.entities.erase(n) > 0;
    pol.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < pol.size(); ++i)
    for (std::size_t j = i + 1; j < pol.size(); ++j)
      if (!pol[i].entities.empty() && pol[i].negated != pol[j].negated && pol[i].entities == pol[j].entities) --score;
  return clamp_score(score);
}

int alignment_score(double mean_cosine) {
  return clamp_score(static_cast<int>(std::floor(1.0 + 4.0 * mean_cosine + 0.5)));
}

int score_semantic_alignment(const Corpus& original, const Corpus& reverse, Embedder& emb, const Thresholds& t,
                             const Lexicons& lex) {
  if (original.empty()) throw Error(Errc::EmptyCorpus, original.project_id, "original corpus is empty");
  if (reverse.empty()) throw Error(Errc::EmptyCorpus, reverse.project_id, "reverse corpus is empty");
  for (const auto* c : {&original, &reverse})
    for (const auto& a : c->artefacts) require_requirement(a);
  const auto result = align_cross(segment_corpus(original), segment_corpus(reverse), emb, t, lex.stopwords);
  return alignment_score(result.mean_cosine);
}

ArtefactScores HeuristicRubric::score(const Artefact& a) {
  return {score_clarity(a, lex_), score_completeness(a, lex_), score_testability(a, lex_)};
}

std::string_view rubric_metric_definitions() {
  return "clarity: the text is unambiguous and easy to read; vague qualifiers lower the score.\n"
         "completeness: the text names an actor, an action, concrete values and the expected outcome.\n"
         "testability: a test can verify the text with a measurable, observable pass/fail result.\n"
         "Score each metric as an integer from 1 (poor) to 5 (excellent).";
}

std::optional<ArtefactScores> parse_judge_scores(std::string_view text) {
  std::optional<int> clarity, completeness, testability;
  for (auto line : str::lines(text)) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = str::lower(str::trim(line.substr(0, colon)));
    const auto value = str::trim(line.substr(colon + 1));
    if (value.size() != 1 || value[0] < '1' || value[0] > '5') continue;
    const int v = value[0] - '0';
    if (key == "clarity") clarity = v;
    if (key == "completeness") completeness = v;
    if (key == "testability") testability = v;
  }
  if (!clarity || !completeness || !testability) return std::nullopt;
  return ArtefactScores{*clarity, *completeness, *testability};
}

}  // namespace qeloop
