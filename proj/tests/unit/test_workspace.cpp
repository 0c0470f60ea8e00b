#include "qeloop/reporting.hpp"
#include "qeloop/serialization.hpp"
#include "qeloop/workspace.hpp"
#include "support.hpp"

using namespace qeloop;
using nlohmann::json;

namespace {

Corpus sample() { return parse_requirements(read_file(test::samples_dir() / "banking" / "requirements.txt"), "banking"); }

}  // namespace

TEST_CASE("transition table") {
  using S = SessionStatus;
  CHECK(allowed_transition(S::AwaitingReview, S::Running));
  CHECK_FALSE(allowed_transition(S::AwaitingReview, S::Converged));
  CHECK(allowed_transition(S::Running, S::AwaitingReview));
  CHECK(allowed_transition(S::Running, S::Converged));
  CHECK(allowed_transition(S::Running, S::CycleLimit));
  CHECK_FALSE(allowed_transition(S::Running, S::Running));
  CHECK_FALSE(allowed_transition(S::Converged, S::Running));
  CHECK_FALSE(allowed_transition(S::CycleLimit, S::AwaitingReview));
}

TEST_CASE("corpora are stored in canonical form") {
  test::TempDir dir("ws");
  Workspace ws(dir.path(), "banking");
  CHECK_FALSE(ws.load_corpus(CorpusRole::Original));
  ws.store_corpus(CorpusRole::Original, sample());
  CHECK(ws.load_corpus(CorpusRole::Original) == sample());
  const auto bdd = parse_gherkin(read_file(test::samples_dir() / "banking" / "login.feature"), "banking");
  ws.store_corpus(CorpusRole::Derived, bdd);
  CHECK(ws.load_corpus(CorpusRole::Derived) == bdd);
}

TEST_CASE("session state survives a save and load") {
  test::TempDir dir("session");
  Workspace ws(dir.path(), "banking");
  auto ctx = make_mock_context();
  auto state = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
  state = advance(state, accept_all(state, "qa", fixed_clock("2026-01-01T00:00:00Z")), ctx);

  SessionFile s;
  s.session_id = s.project_id = "banking";
  s.state = state;
  s.pending.push_back({"cross:X#0:-", RecommendationAction::AddCoverage, std::nullopt, "qa", "t"});
  s.transitions.push_back({SessionStatus::AwaitingReview, SessionStatus::Running, "t1"});
  s.updated_at = "t2";
  ws.save_session(s);
  const auto loaded = ws.load_session();
  REQUIRE(loaded);
  CHECK(to_json_doc(*loaded) == to_json_doc(s));
  CHECK(loaded->state.history == state.history);
  CHECK(loaded->state.working == state.working);
  CHECK(loaded->state.draft == state.draft);
  CHECK(loaded->state.edits == state.edits);
  CHECK(loaded->state.updates == state.updates);
  CHECK(loaded->transitions == s.transitions);

  // Re-running from the restored state gives the same next cycle.
  if (state.status == SessionStatus::AwaitingReview) {
    auto a = advance(state, accept_all(state, "qa", ctx.clock), ctx);
    auto ctx2 = make_mock_context();
    auto b = advance(loaded->state, accept_all(loaded->state, "qa", ctx.clock), ctx2);
    CHECK(a.history.back().mean_cosine == b.history.back().mean_cosine);
  }
}

TEST_CASE("unsupported session versions are rejected") {
  json j = to_json_doc(SessionFile{});
  j["version"] = 99;
  CHECK_ERRC(session_from_json(j), Errc::InvalidConfig);
  CHECK_ERRC(session_from_json(json{{"version", 1}}), Errc::InvalidConfig);
}

TEST_CASE("audit log appends one line per decision") {
  test::TempDir dir("audit");
  Workspace ws(dir.path(), "p");
  ws.append_audit("p", 1, {{"a", RecommendationAction::Refine, "x", "qa", "t"}, {"b", RecommendationAction::Merge, std::nullopt, "qa", "t"}});
  ws.append_audit("p", 2, {{"c", RecommendationAction::KeepDistinct, std::nullopt, "qa", "t"}});
  const auto lines = ws.read_audit();
  REQUIRE(lines.size() == 3);
  CHECK(lines[0]["decision"]["pair_id"] == "a");
  CHECK(lines[2]["cycle"] == 2);
  CHECK(lines[2]["session_id"] == "p");
}

TEST_CASE("enum names in JSON are validated") {
  const json ok{{"pair_id", "p"}, {"verdict", "AddCoverage"}};
  const auto d = ok.get<ReviewDecision>();
  CHECK(d.verdict == RecommendationAction::AddCoverage);
  CHECK(d.reviewer.empty());
  CHECK(json(d)["verdict"] == "AddCoverage");
  json bad = ok;
  bad["verdict"] = "Sideways";
  CHECK_ERRC(bad.get<ReviewDecision>(), Errc::InvalidConfig);
}
