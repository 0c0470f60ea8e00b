#include "qeloop/similarity.hpp"

#include <algorithm>
#include <tuple>

#include "qeloop/error.hpp"

namespace qeloop {

std::string_view to_string(MatchCategory c) {
  switch (c) {
    case MatchCategory::NoMatch: return "NoMatch";
    case MatchCategory::Low: return "Low";
    case MatchCategory::Medium: return "Medium";
    case MatchCategory::High: return "High";
  }
  return "NoMatch";
}

std::optional<MatchCategory> parse_category(std::string_view name) {
  for (auto c : {MatchCategory::NoMatch, MatchCategory::Low, MatchCategory::Medium, MatchCategory::High})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.provider_id != v.provider_id) throw Error(Errc::ProviderMismatch, u.provider_id, "vs " + v.provider_id);
  if (u.dim() != v.dim()) {
    throw Error(Errc::DimensionMismatch, u.provider_id,
                "expected " + std::to_string(u.dim()) + ", got " + std::to_string(v.dim()));
  }
  if (u.is_zero() || v.is_zero()) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) dot += u.values[i] * v.values[i];
  return std::clamp(dot, 0.0, 1.0);
}

double jaccard(const TokenSet& a, const TokenSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.contains(t) ? 1 : 0;
  const auto uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MatchCategory classify(double score, const Thresholds& t) {
  if (score > t.high) return MatchCategory::High;
  if (score >= t.medium) return MatchCategory::Medium;
  if (score >= t.low) return MatchCategory::Low;
  return MatchCategory::NoMatch;
}

std::vector<std::optional<std::size_t>> greedy_match(const std::vector<std::vector<double>>& scores,
                                                     double min_score) {
  struct Cand {
    double score;
    std::size_t row, col;
  };
  std::vector<Cand> cands;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    cols = std::max(cols, scores[r].size());
    for (std::size_t c = 0; c < scores[r].size(); ++c)
      if (scores[r][c] >= min_score) cands.push_back({scores[r][c], r, c});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });

  std::vector<std::optional<std::size_t>> out(scores.size());
  std::vector<bool> col_used(cols, false);
  for (const auto& c : cands) {
    if (out[c.row] || col_used[c.col]) continue;
    out[c.row] = c.col;
    col_used[c.col] = true;
  }
  return out;
}

namespace {

std::vector<std::string> texts_of(const std::vector<Segment>& segs) {
  std::vector<std::string> out;
  out.reserve(segs.size());
  for (const auto& s : segs) out.push_back(s.text);
  return out;
}

}  // namespace

AlignmentResult align_cross(const std::vector<Segment>& left, const std::vector<Segment>& right, Embedder& emb,
                            const Thresholds& t, const WordSet& stopwords) {
  const auto lt = texts_of(left);
  const auto rt = texts_of(right);
  const auto lv = emb.embed_many(lt);
  const auto rv = emb.embed_many(rt);

  std::vector<std::vector<double>> scores(left.size(), std::vector<double>(right.size(), 0.0));
  for (std::size_t i = 0; i < left.size(); ++i)
    for (std::size_t j = 0; j < right.size(); ++j) scores[i][j] = cosine(lv[i], rv[j]);

  const auto assignment = greedy_match(scores, t.low);

  AlignmentResult result;
  double total = 0.0;
  for (std::size_t i = 0; i < left.size(); ++i) {
    MatchPair p;
    p.left = left[i];
    if (const auto j = assignment[i]) {
      p.right = right[*j];
      p.cosine = scores[i][*j];
      p.jaccard = jaccard(tokenize_normalize(lt[i], stopwords), tokenize_normalize(rt[*j], stopwords));
      p.category = classify(p.cosine, t);
    }
    total += p.cosine;
    result.pairs.push_back(std::move(p));
  }
  result.mean_cosine = left.empty() ? 0.0 : total / static_cast<double>(left.size());
  return result;
}

std::vector<MatchPair> dedup_intra(const std::vector<Segment>& segments, Embedder& emb, const Thresholds& t,
                                   const WordSet& stopwords) {
  if (segments.size() < 2)
    throw Error(Errc::TooFewSegments, std::to_string(segments.size()), "need at least two segments");
  const auto texts = texts_of(segments);
  const auto vecs = emb.embed_many(texts);

  struct Hit {
    double cosine;
    std::size_t i, j;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (std::size_t j = i + 1; j < segments.size(); ++j) {
      if (segments[i].artefact_id == segments[j].artefact_id) continue;
      const double c = cosine(vecs[i], vecs[j]);
      if (classify(c, t) >= MatchCategory::Medium) hits.push_back({c, i, j});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });

  std::vector<MatchPair> out;
  out.reserve(hits.size());
  for (const auto& h : hits) {
    out.push_back({segments[h.i], segments[h.j], h.cosine,
                   jaccard(tokenize_normalize(texts[h.i], stopwords), tokenize_normalize(texts[h.j], stopwords)),
                   classify(h.cosine, t)});
  }
  return out;
}

}  // namespace qeloop
