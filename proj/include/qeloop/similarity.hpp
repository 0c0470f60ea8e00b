#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "qeloop/embedding.hpp"
#include "qeloop/text.hpp"

namespace qeloop {

struct Thresholds {
  double high = 0.8;
  double medium = 0.6;
  double low = 0.3;

  // 0 < low < medium < high < 1
  bool valid() const { return 0.0 < low && low < medium && medium < high && high < 1.0; }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// Totally ordered: NoMatch < Low < Medium < High.
enum class MatchCategory { NoMatch = 0, Low = 1, Medium = 2, High = 3 };

std::string_view to_string(MatchCategory c);
std::optional<MatchCategory> parse_category(std::string_view name);

// Dot product of unit vectors clamped to [0, 1]; 0 when either is zero.
// Throws DimensionMismatch / ProviderMismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

// |a ∩ b| / |a ∪ b|, with jaccard(∅, ∅) = 1.
double jaccard(const TokenSet& a, const TokenSet& b);

// score > high -> High; [medium, high] -> Medium; [low, medium) -> Low;
// below low -> NoMatch.
MatchCategory classify(double score, const Thresholds& t);

struct MatchPair {
  Segment left;
  std::optional<Segment> right;  // absent: unmatched, cosine 0, NoMatch
  double cosine = 0.0;
  double jaccard = 0.0;
  MatchCategory category = MatchCategory::NoMatch;
};

struct AlignmentResult {
  std::vector<MatchPair> pairs;  // one per left segment, in left order
  double mean_cosine = 0.0;      // unmatched count as 0; empty left gives 0
};

/// Greedy global best-first assignment over a dense score matrix.
///
/// Candidate pairs are those with score >= min_score. They are taken in
/// order of descending score, then ascending row, then ascending column,
/// skipping any whose row or column is already used. Returns the column for
/// each row, if any.
std::vector<std::optional<std::size_t>> greedy_match(const std::vector<std::vector<double>>& scores,
                                                     double min_score);

AlignmentResult align_cross(const std::vector<Segment>& left, const std::vector<Segment>& right, Embedder& emb,
                            const Thresholds& t, const WordSet& stopwords);

// Unordered pairs of segments from different artefacts whose category is at
// least Medium, by descending cosine (ties by position). Throws
// TooFewSegments below two segments.
std::vector<MatchPair> dedup_intra(const std::vector<Segment>& segments, Embedder& emb, const Thresholds& t,
                                   const WordSet& stopwords);

}  // namespace qeloop
