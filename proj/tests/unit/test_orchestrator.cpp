#include <algorithm>

#include "qeloop/orchestrator.hpp"
#include "qeloop/reporting.hpp"
#include "qeloop/strings.hpp"
#include "support.hpp"

using namespace qeloop;

namespace {

Corpus sample() { return parse_requirements(read_file(test::samples_dir() / "banking" / "requirements.txt"), "banking"); }

MatchPair pair(std::string left_id, std::string left, std::optional<std::pair<std::string, std::string>> right,
               double cos, const Thresholds& t = {}) {
  MatchPair p;
  p.left = {std::move(left_id), 0, std::move(left)};
  if (right) p.right = Segment{right->first, 0, right->second};
  p.cosine = cos;
  p.category = right ? classify(cos, t) : MatchCategory::NoMatch;
  return p;
}

const Recommendation* find_item(const CycleState& s, RecommendationAction a) {
  const auto it = std::find_if(s.queue.begin(), s.queue.end(), [&](const auto& r) { return r.action == a; });
  return it == s.queue.end() ? nullptr : &*it;
}

// Two-sentence requirement whose derived tests cover only the first sentence.
CycleState partial_coverage_state(PipelineContext& ctx) {
  auto reqs = parse_requirements(
      "REQ-A: The customer downloads monthly statements as PDF files. "
      "An administrator exports the audit log within 5 minutes.\n",
      "p");
  auto derived = parse_testcases("TC-A-1: statements\nStep: monthly\nExpect: The customer downloads statements as PDF files\n", "p");
  return run_cycle(initial_state(reqs, reqs, ctx, derived), ctx);
}

}  // namespace

TEST_CASE("queue mapping by scope and category") {
  AlignmentResult al;
  al.pairs.push_back(pair("A", "The account is locked.", std::pair{"A", "The account locks."}, 0.7));
  al.pairs.push_back(pair("B", "Statements as PDF.", std::pair{"B", "PDF."}, 0.45));
  al.pairs.push_back(pair("C", "Audit export.", std::nullopt, 0.0));
  al.pairs.push_back(pair("D", "Session expires.", std::pair{"D", "Session expires."}, 1.0));
  std::vector<MatchPair> dedup{pair("E", "Same thing.", std::pair{"F", "Same thing."}, 0.95),
                               pair("G", "Close thing.", std::pair{"H", "Closer thing."}, 0.65)};
  const auto q = build_review_queue(al, dedup, {}, Lexicons::defaults());
  REQUIRE(q.size() == 5);

  auto by_left = [&](std::string_view id) {
    return *std::find_if(q.begin(), q.end(), [&](const auto& r) { return r.pair.left.artefact_id == id; });
  };
  CHECK(by_left("A").action == RecommendationAction::Refine);
  CHECK(by_left("A").requires_human);
  CHECK(by_left("B").action == RecommendationAction::Refine);
  CHECK_FALSE(by_left("B").requires_human);
  CHECK(by_left("C").action == RecommendationAction::AddCoverage);
  CHECK(by_left("E").action == RecommendationAction::Merge);
  CHECK(by_left("E").scope == PairScope::Intra);
  CHECK(by_left("G").action == RecommendationAction::KeepDistinct);
  CHECK(by_left("G").requires_human);
  CHECK(std::none_of(q.begin(), q.end(), [](const auto& r) { return r.pair.left.artefact_id == "D"; }));

  for (std::size_t i = 1; i < q.size(); ++i) {
    const bool ordered = q[i - 1].pair.cosine > q[i].pair.cosine ||
                         (q[i - 1].pair.cosine == q[i].pair.cosine && q[i - 1].pair_id < q[i].pair_id);
    CHECK(ordered);
  }
  for (const auto& r : q) {
    CHECK(r.rationale.find(r.pair.left.id()) != std::string::npos);
    if (r.pair.right) CHECK(r.rationale.find(r.pair.right->id()) != std::string::npos);
    CHECK(r.rationale.find(str::fixed(r.pair.cosine)) != std::string::npos);
    CHECK_FALSE(r.testing_impact.empty());
  }
  CHECK(build_review_queue(al, dedup, {}, Lexicons::defaults()).size() == q.size());
}

TEST_CASE("cross actions") {
  CHECK_FALSE(cross_action(MatchCategory::High));
  CHECK(cross_action(MatchCategory::Medium) == RecommendationAction::Refine);
  CHECK(cross_action(MatchCategory::Low) == RecommendationAction::Refine);
  CHECK(cross_action(MatchCategory::NoMatch) == RecommendationAction::AddCoverage);
}

TEST_CASE("undegraded input aligns fully in one cycle") {
  auto ctx = make_mock_context();
  const auto s = run_cycle(initial_state(sample(), sample(), ctx), ctx);
  REQUIRE(s.history.size() == 1);
  CHECK(s.history[0].mean_cosine == doctest::Approx(1.0));
  CHECK(s.queue.empty());
  CHECK(s.status == SessionStatus::Converged);
  CHECK(s.cycle == 2);
  CHECK(s.history[0].histogram.total() == s.alignment.pairs.size());
}

TEST_CASE("degraded input yields Low and NoMatch items") {
  auto ctx = make_mock_context();
  const auto s = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
  const auto& h = s.history[0];
  CHECK(h.mean_cosine < 1.0);
  // Golden histogram of the sample corpus at d = 0.6.
  CHECK(h.mean_cosine == doctest::Approx(0.5433).epsilon(1e-4));
  CHECK(h.histogram == CategoryHistogram{1, 6, 2, 1});
  CHECK(find_item(s, RecommendationAction::Refine));
  CHECK(find_item(s, RecommendationAction::AddCoverage));
  CHECK(s.status == SessionStatus::AwaitingReview);
  for (const auto& [id, rs] : s.scores) CHECK(rs.valid());
}

TEST_CASE("empty decision list leaves the state unchanged") {
  auto ctx = make_mock_context();
  const auto s = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
  const auto t = apply_decisions(s, {});
  CHECK(t.working == s.working);
  CHECK(t.draft == s.draft);
  CHECK(t.edits == s.edits);
  CHECK(t.updates.empty());
}

TEST_CASE("one Refine with edited text changes exactly one segment") {
  auto ctx = make_mock_context();
  const auto s = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
  const auto* item = find_item(s, RecommendationAction::Refine);
  REQUIRE(item);
  const auto t = apply_decisions(s, {{item->pair_id, RecommendationAction::Refine, "A rewritten sentence.", "qa", "t"}});
  const auto before = segment_corpus(s.working);
  const auto after = segment_corpus(t.working);
  REQUIRE(before.size() == after.size());
  int differing = 0;
  for (std::size_t i = 0; i < before.size(); ++i) differing += before[i].text != after[i].text;
  CHECK(differing == 1);
  REQUIRE(t.updates.at(1).size() == 1);
  CHECK(t.updates.at(1)[0].updated_text == "A rewritten sentence.");
  CHECK(t.updates.at(1)[0].reviewer == "qa");
}

TEST_CASE("decision validation is atomic") {
  auto ctx = make_mock_context();
  const auto s = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
  const auto* item = find_item(s, RecommendationAction::Refine);
  REQUIRE(item);
  const ReviewDecision ok{item->pair_id, RecommendationAction::Refine, "Fixed.", "qa", "t"};
  CHECK_ERRC(apply_decisions(s, {ok, {"cross:nope#0:-", RecommendationAction::Refine, std::nullopt, "qa", "t"}}),
             Errc::UnknownPairId);
  CHECK_ERRC(apply_decisions(s, {ok, {item->pair_id, RecommendationAction::KeepDistinct, std::nullopt, "qa", "t"}}),
             Errc::ConflictingDecisions);
  CHECK_ERRC(apply_decisions(s, {{item->pair_id, RecommendationAction::Refine, "  ", "qa", "t"}}), Errc::InvalidDecision);
  CHECK(s.edits.empty());
}

TEST_CASE("synthesis: identical reverse keeps the original") {
  auto ctx = make_mock_context();
  const auto original = sample();
  const auto segs = segment_corpus(original);
  const auto al = align_cross(segs, segs, *ctx.embedder, {}, ctx.lex.stopwords);
  const auto u = synthesize_unified(original, original, al, {}, *ctx.rubric, 1);
  REQUIRE(u.corpus.size() == original.size());
  for (std::size_t i = 0; i < u.corpus.size(); ++i) {
    CHECK(u.corpus.artefacts[i].id == original.artefacts[i].id);
    CHECK(u.corpus.artefacts[i].body == original.artefacts[i].body);
    CHECK(u.corpus.artefacts[i].origin == Origin::Unified);
  }
  for (const auto& p : u.provenance) CHECK(p.source == SlotSource::Original);
}

TEST_CASE("synthesis: degraded original adopts stronger reverse segments") {
  auto ctx = make_mock_context();
  const auto degraded = degrade(sample(), {0.6, false});
  const auto left = segment_corpus(degraded);
  const auto right = segment_corpus(sample());
  const auto al = align_cross(left, right, *ctx.embedder, {}, ctx.lex.stopwords);
  HeuristicRubric h;
  auto robustness = [&](const std::string& text) {
    Artefact a;
    a.body = text;
    return h.score(a).robustness();
  };
  const auto u = synthesize_unified(degraded, sample(), al, {}, h, 1);
  std::size_t adopted = 0;
  for (const auto& p : al.pairs) {
    const auto it = std::find_if(u.provenance.begin(), u.provenance.end(),
                                 [&](const auto& x) { return x.slot_id == p.left.id(); });
    REQUIRE(it != u.provenance.end());
    const bool stronger = p.right && robustness(p.right->text) > robustness(p.left.text);
    CHECK((it->source == SlotSource::Reverse) == stronger);
    adopted += stronger;
  }
  CHECK(adopted > 0);
}

TEST_CASE("synthesis: AddCoverage adds exactly one requirement") {
  auto ctx = make_mock_context();
  const auto s = partial_coverage_state(ctx);
  const auto* item = find_item(s, RecommendationAction::AddCoverage);
  REQUIRE(item);
  const auto t = apply_decisions(s, {{item->pair_id, RecommendationAction::AddCoverage, std::nullopt, "qa", "t"}});
  const auto u = synthesize_unified(t.original, t.reverse, t.alignment, t.edits, *ctx.rubric, 1);
  REQUIRE(u.corpus.size() == t.original.size() + 1);
  CHECK(u.corpus.artefacts.back().id == "A-cov1");
  CHECK(u.corpus.artefacts.back().body == item->pair.left.text);
  CHECK(u.provenance.back().source == SlotSource::Coverage);
}

TEST_CASE("AddCoverage on a single-sentence requirement rewrites it in place") {
  auto ctx = make_mock_context();
  auto reqs = parse_requirements("REQ-A: An administrator exports the audit log within 5 minutes.\n", "p");
  auto derived = parse_testcases("TC-A-1: x\nStep: monthly\nExpect: Customers download statements\n", "p");
  const auto s = run_cycle(initial_state(reqs, reqs, ctx, derived), ctx);
  const auto* item = find_item(s, RecommendationAction::AddCoverage);
  REQUIRE(item);
  const auto t = apply_decisions(s, {{item->pair_id, RecommendationAction::AddCoverage, std::nullopt, "qa", "t"}});
  CHECK(t.working.size() == 1);
  CHECK(t.edits.at(0).kind == EditKind::Replace);
}

TEST_CASE("convergence rule") {
  ConvergenceConfig cfg;
  SummaryRecord a;
  a.cycle = 1;
  a.mean_cosine = 1.0;
  a.clarity = a.completeness = a.testability = a.consistency = a.semantic_alignment = 4.0;
  SummaryRecord b = a;
  b.cycle = 2;
  CHECK_FALSE(check_convergence({a}, cfg));
  CHECK(check_convergence({a, b}, cfg));
  b.mean_cosine = 0.8;
  b.clarity += 2.5;  // rubric mean moves by 0.5
  CHECK_FALSE(check_convergence({a, b}, cfg));
  SummaryRecord c = b;
  c.cycle = 3;
  c.mean_cosine = 0.1;
  CHECK(check_convergence({a, b, c}, cfg));
}

TEST_CASE("closed loop under accept-all improves monotonically") {
  auto ctx = make_mock_context();
  const auto s = run_loop(sample(), degrade(sample(), {0.6, false}), ctx,
                          [&](const CycleState& st) { return accept_all(st, "qa", ctx.clock); });
  REQUIRE(s.history.size() >= 2);
  for (std::size_t i = 1; i < s.history.size(); ++i) CHECK(s.history[i].mean_cosine > s.history[i - 1].mean_cosine);
  CHECK(s.history.back().mean_cosine >= 0.95);
  CHECK(s.status == SessionStatus::Converged);
  for (std::size_t i = 0; i < s.history.size(); ++i) CHECK(s.history[i].cycle == i + 1);
}

TEST_CASE("cycle limit is a terminal status with history intact") {
  auto ctx = make_mock_context();
  ctx.convergence.max_cycles = 1;
  auto s = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
  CHECK(s.final_review);
  const auto first = s.history;
  s = advance(s, {}, ctx);
  CHECK(s.status == SessionStatus::CycleLimit);
  CHECK(s.history == first);
  auto again = s;
  again.status = SessionStatus::AwaitingReview;
  CHECK_ERRC(run_cycle(again, ctx), Errc::CycleLimitExceeded);
}

TEST_CASE("advance requires an awaiting state") {
  auto ctx = make_mock_context();
  const auto s = run_cycle(initial_state(sample(), sample(), ctx), ctx);
  CHECK_ERRC(advance(s, {}, ctx), Errc::InvalidDecision);
}

TEST_CASE("negative validation") {
  auto ctx = make_mock_context();
  const auto r = negative_validation(sample(), {0.8, true}, ctx);
  CHECK(r.pass);
  CHECK(r.baseline_histogram.high == r.baseline_histogram.total());
  CHECK(r.degraded_mean_rubric < r.baseline_mean_rubric);
  CHECK(r.degraded_histogram.low + r.degraded_histogram.no_match > r.degraded_histogram.total() / 2);

  const auto none = negative_validation(sample(), {0.0, false}, ctx);
  CHECK_FALSE(none.pass);
  CHECK(none.reason == "no degradation");
  CHECK(none.degraded_histogram == none.baseline_histogram);

  const auto weak = negative_validation(sample(), {0.3, false}, ctx);
  CHECK_FALSE(weak.pass);
}

TEST_CASE("drafts render and re-render stably") {
  const auto d = make_draft(sample(), sample());
  const auto c = render_draft(d, "banking");
  CHECK(c.size() == sample().size());
  CHECK(make_draft(sample(), c) == d);
}
