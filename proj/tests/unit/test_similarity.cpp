#include <algorithm>
#include <numeric>

#include "qeloop/similarity.hpp"
#include "support.hpp"

using namespace qeloop;

namespace {

EmbeddingVector vec(std::vector<double> v) { return {"t", std::move(v)}; }

std::vector<Segment> segs(std::string_view artefact, std::initializer_list<std::string_view> texts) {
  std::vector<Segment> out;
  for (auto t : texts) out.push_back({std::string(artefact), out.size(), std::string(t)});
  return out;
}

double brute_force_best(const std::vector<std::vector<double>>& s) {
  std::vector<std::size_t> perm(s.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0;
  do {
    double total = 0;
    for (std::size_t i = 0; i < s.size(); ++i) total += s[i][perm[i]];
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("cosine") {
  CHECK(cosine(vec({0.6, 0.8}), vec({0.6, 0.8})) == doctest::Approx(1.0));
  CHECK(cosine(vec({1, 0}), vec({0, 1})) == 0.0);
  CHECK(cosine(vec({0.6, 0.8}), vec({0.8, 0.6})) == doctest::Approx(0.96).epsilon(1e-12));
  CHECK(cosine(vec({1, 0}), vec({-1, 0})) == 0.0);
  CHECK(cosine(vec({0, 0}), vec({1, 0})) == 0.0);
  CHECK_ERRC(cosine(vec({1, 0}), vec({1, 0, 0})), Errc::DimensionMismatch);
  CHECK_ERRC(cosine(vec({1, 0}), EmbeddingVector{"other", {1, 0}}), Errc::ProviderMismatch);
}

TEST_CASE("jaccard") {
  CHECK(jaccard({"a", "b"}, {"a", "b"}) == 1.0);
  CHECK(jaccard({"a"}, {"b"}) == 0.0);
  CHECK(jaccard({}, {}) == 1.0);
  CHECK(jaccard({"system", "log", "errors", "failed"}, {"system", "log", "errors", "warnings"}) == 0.6);
}

TEST_CASE("classify bands") {
  const Thresholds t;
  CHECK(classify(0.85, t) == MatchCategory::High);
  CHECK(classify(0.80, t) == MatchCategory::Medium);
  CHECK(classify(0.45, t) == MatchCategory::Low);
  CHECK(classify(0.10, t) == MatchCategory::NoMatch);
  CHECK(MatchCategory::NoMatch < MatchCategory::Low);
  CHECK_FALSE(Thresholds{0.5, 0.6, 0.3}.valid());
}

TEST_CASE("align_cross basics") {
  auto emb = make_hash_embedder();
  const auto& sw = Lexicons::defaults().stopwords;
  const auto one = segs("A", {"The account is locked."});
  auto r = align_cross(one, segs("B", {"The account is locked."}), *emb, {}, sw);
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].cosine == doctest::Approx(1.0));
  CHECK(r.mean_cosine == doctest::Approx(1.0));
  CHECK(r.pairs[0].category == MatchCategory::High);

  r = align_cross(segs("A", {"x y", "z w"}), {}, *emb, {}, sw);
  REQUIRE(r.pairs.size() == 2);
  CHECK_FALSE(r.pairs[0].right);
  CHECK(r.pairs[1].category == MatchCategory::NoMatch);
  CHECK(r.mean_cosine == 0.0);
}

TEST_CASE("greedy on a known 3x3 matrix") {
  // Greedy takes 0.9 first and is forced into 0.1 afterwards; the optimum
  // pairs around it.
  const std::vector<std::vector<double>> s{{0.9, 0.8, 0.0}, {0.8, 0.0, 0.0}, {0.0, 0.0, 0.1}};
  const auto m = greedy_match(s, 0.0);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == 0u);
  CHECK(m[1] == 1u);
  CHECK(m[2] == 2u);
  CHECK(brute_force_best(s) == doctest::Approx(1.7));
}

TEST_CASE("greedy against brute force on all 3x3 matrices over {0,.25,...,1}") {
  const double levels[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t differs = 0, total = 0;
  std::vector<std::vector<double>> s(3, std::vector<double>(3));
  for (int code = 0; code < 1953125; ++code) {  // 5^9
    int c = code;
    for (int k = 0; k < 9; ++k, c /= 5) s[k / 3][k % 3] = levels[c % 5];
    const auto m = greedy_match(s, 0.0);
    double g = 0;
    std::vector<bool> used(3, false);
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(m[i].has_value());
      CHECK_FALSE(used[*m[i]]);
      used[*m[i]] = true;
      g += s[i][*m[i]];
    }
    const double opt = brute_force_best(s);
    if (g + 1e-12 < opt) ++differs;
    if (!(2 * g + 1e-12 >= opt)) FAIL("greedy below half of optimum");
    ++total;
  }
  MESSAGE("greedy suboptimal on " << differs << " of " << total << " instances");
  CHECK(differs > 0);
}

TEST_CASE("min_score leaves rows unmatched") {
  const auto m = greedy_match({{0.2, 0.1}, {0.1, 0.9}}, 0.3);
  CHECK_FALSE(m[0]);
  CHECK(m[1] == 1u);
}

TEST_CASE("dedup_intra") {
  auto emb = make_hash_embedder();
  const auto& sw = Lexicons::defaults().stopwords;
  std::vector<Segment> two{{"A", 0, "The account is locked."}, {"B", 0, "The account is locked."}};
  auto d = dedup_intra(two, *emb, {}, sw);
  REQUIRE(d.size() == 1);
  CHECK(d[0].category == MatchCategory::High);
  CHECK(d[0].cosine == doctest::Approx(1.0));

  std::vector<Segment> distinct{{"A", 0, "Customer downloads statements."}, {"B", 0, "Administrator exports audit log."}};
  CHECK(dedup_intra(distinct, *emb, {}, sw).empty());
  CHECK_ERRC(dedup_intra({two[0]}, *emb, {}, sw), Errc::TooFewSegments);
}

TEST_CASE("dedup_intra on four segments returns exactly the duplicate") {
  auto emb = make_hash_embedder();
  const auto& sw = Lexicons::defaults().stopwords;
  std::vector<Segment> four{{"A", 0, "The session expires after 15 minutes."},
                            {"B", 0, "Statements download as PDF files."},
                            {"C", 0, "The session expires after 15 minutes."},
                            {"D", 0, "Payments above 5000 euros need approval."}};
  // Direct computation over all pairs.
  std::vector<std::pair<std::size_t, std::size_t>> expected;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      if (classify(cosine(emb->embed(four[i].text), emb->embed(four[j].text)), {}) >= MatchCategory::Medium)
        expected.emplace_back(i, j);
  REQUIRE(expected.size() == 1);
  const auto d = dedup_intra(four, *emb, {}, sw);
  REQUIRE(d.size() == 1);
  CHECK(d[0].left.artefact_id == "A");
  REQUIRE(d[0].right);
  CHECK(d[0].right->artefact_id == "C");
}
