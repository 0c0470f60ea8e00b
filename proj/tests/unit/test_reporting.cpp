#include <cmath>
#include <map>

#include "qeloop/reporting.hpp"
#include "support.hpp"

using namespace qeloop;
using nlohmann::json;

namespace {

Corpus sample() { return parse_requirements(read_file(test::samples_dir() / "banking" / "requirements.txt"), "banking"); }

SemanticResultRow semantic_row(double cos) {
  SemanticResultRow r;
  r.left_id = "A#0";
  r.right_id = "A#0";
  r.left_text = "The account, once \"locked\", stays locked.\nSecond line";
  r.right_text = "Locked account";
  r.cosine = cos;
  r.jaccard = 0.5;
  r.category = classify(cos, {});
  r.action = cross_action(r.category);
  r.rationale = "why";
  r.testing_impact = "impact";
  return r;
}

EnergyLedger ledger(std::int64_t ops, double per_op = 0.1, double grid = 0.0004,
                    std::optional<std::int64_t> baseline = std::nullopt) {
  return {ops, per_op, grid, baseline};
}

CycleState looped_state(PipelineContext& ctx) {
  auto s = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
  return advance(s, accept_all(s, "qa", ctx.clock), ctx);
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = read_file(e.path());
  return out;
}

}  // namespace

TEST_CASE("csv formatting") {
  CHECK(to_csv(std::vector<SemanticResultRow>{}) ==
        "left_id,right_id,left_text,right_text,cosine,jaccard,category,action,rationale,testing_impact\r\n");
  CHECK(to_json_doc(std::vector<ImpactRow>{}) == json{{"schema", "impact_analysis"}, {"version", 1}, {"rows", json::array()}});
  const auto csv = to_csv(std::vector{semantic_row(0.8)});
  CHECK(csv.find(",0.8000,") != std::string::npos);
  CHECK(csv.find("\"The account, once \"\"locked\"\", stays locked.\nSecond line\"") != std::string::npos);
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
}

TEST_CASE("invalid rows name their index") {
  auto bad = semantic_row(0.8);
  bad.cosine = 1.2;
  try {
    validate_rows(std::vector{semantic_row(0.5), bad});
    FAIL("expected InvalidRow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidRow);
    CHECK(e.subject() == "1");
  }
  auto wrong_action = semantic_row(0.9);
  wrong_action.action = RecommendationAction::Merge;
  CHECK_ERRC(validate_rows(std::vector{wrong_action}), Errc::InvalidRow);
  CHECK_ERRC(validate_rows(std::vector{ImpactRow{"R", "T", -0.1, ""}}), Errc::InvalidRow);
  CHECK_ERRC(validate_rows(std::vector{UpdatedRequirementRow{"R", 0, "", "", RecommendationAction::Refine, ""}}),
             Errc::InvalidRow);
  test::TempDir dir("invalid");
  CHECK_ERRC(emit(std::vector{bad}, dir.path() / "semantic_results"), Errc::InvalidRow);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "semantic_results.csv"));
}

TEST_CASE("parse_csv handles quoting and CRLF") {
  const auto recs = parse_csv("a,b\r\n\"x,\"\"y\"\"\",\"multi\r\nline\"\r\n,\r\n");
  REQUIRE(recs.size() == 3);
  CHECK(recs[1][0] == "x,\"y\"");
  CHECK(recs[1][1] == "multi\r\nline");
  CHECK(recs[2] == std::vector<std::string>{"", ""});
}

TEST_CASE("round trips from a real run") {
  auto ctx = make_mock_context();
  const auto s = looped_state(ctx);
  const auto sem = semantic_rows(s.alignment, {}, ctx.lex);
  const auto imp = impact_rows(s.working, s.derived, *ctx.embedder, {});
  const auto upd = s.updates.at(1);
  const auto& sum = s.history;
  REQUIRE_FALSE(sem.empty());
  REQUIRE_FALSE(upd.empty());

  CHECK(parse_semantic_results_json(to_json_doc(sem)) == sem);
  CHECK(parse_impact_analysis_json(to_json_doc(imp)) == imp);
  CHECK(parse_updated_requirements_json(to_json_doc(upd)) == upd);
  CHECK(parse_overall_summary_json(to_json_doc(sum)) == sum);

  const auto sem2 = parse_semantic_results_csv(to_csv(sem));
  REQUIRE(sem2.size() == sem.size());
  for (std::size_t i = 0; i < sem.size(); ++i) {
    CHECK(sem2[i].left_id == sem[i].left_id);
    CHECK(sem2[i].right_id == sem[i].right_id);
    CHECK(sem2[i].left_text == sem[i].left_text);
    CHECK(sem2[i].category == sem[i].category);
    CHECK(sem2[i].action == sem[i].action);
    CHECK(sem2[i].rationale == sem[i].rationale);
    CHECK(std::abs(sem2[i].cosine - sem[i].cosine) <= 5e-5);
    CHECK(std::abs(sem2[i].jaccard - sem[i].jaccard) <= 5e-5);
  }
  const auto imp2 = parse_impact_analysis_csv(to_csv(imp));
  REQUIRE(imp2.size() == imp.size());
  for (std::size_t i = 0; i < imp.size(); ++i) {
    CHECK(imp2[i].requirement_id == imp[i].requirement_id);
    CHECK(imp2[i].linked_artefact_id == imp[i].linked_artefact_id);
    CHECK(std::abs(imp2[i].traceability_cosine - imp[i].traceability_cosine) <= 5e-5);
  }
  CHECK(parse_updated_requirements_csv(to_csv(upd)) == upd);
  const auto sum2 = parse_overall_summary_csv(to_csv(sum));
  REQUIRE(sum2.size() == sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    CHECK(sum2[i].histogram == sum[i].histogram);
    CHECK(sum2[i].ops == sum[i].ops);
    CHECK(std::abs(sum2[i].mean_cosine - sum[i].mean_cosine) <= 5e-5);
    CHECK(std::abs(sum2[i].clarity - sum[i].clarity) <= 5e-5);
  }
  // Re-emitting parsed CSV is a fixed point.
  CHECK(to_csv(parse_semantic_results_csv(to_csv(sem))) == to_csv(sem));
  CHECK(to_csv(parse_overall_summary_csv(to_csv(sum))) == to_csv(sum));
}

TEST_CASE("summary histogram equals semantic result tallies") {
  auto ctx = make_mock_context();
  const auto s = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
  CategoryHistogram h;
  for (const auto& r : semantic_rows(s.alignment, {}, ctx.lex)) h.add(r.category);
  CHECK(h == s.history.back().histogram);
}

TEST_CASE("impact rows cover every requirement") {
  auto ctx = make_mock_context();
  Corpus reqs = sample();
  auto derived = ctx.generator->forward(reqs, ArtefactKind::TestCase);
  derived.artefacts.erase(std::remove_if(derived.artefacts.begin(), derived.artefacts.end(),
                                         [](const Artefact& a) { return trace_requirement_id(a) == "PAY-002"; }),
                          derived.artefacts.end());
  const auto rows = impact_rows(reqs, derived, *ctx.embedder, {});
  std::set<std::string> seen;
  for (const auto& r : rows) seen.insert(r.requirement_id);
  CHECK(seen.size() == reqs.size());
  const auto it = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.requirement_id == "PAY-002"; });
  REQUIRE(it != rows.end());
  CHECK(it->linked_artefact_id.empty());
  CHECK(it->traceability_cosine == 0.0);
}

TEST_CASE("energy arithmetic") {
  auto r = compute_co2eq(ledger(0));
  CHECK(r.energy_kwh == 0.0);
  CHECK(r.co2_tons == 0.0);
  r = compute_co2eq(ledger(100));
  CHECK(r.energy_kwh == 10.0);
  CHECK(r.co2_tons == 0.004);
  r = compute_co2eq(ledger(70, 0.1, 0.0004, 100));
  REQUIRE(r.saved_energy_kwh);
  CHECK(*r.saved_energy_kwh == 3.0);
  CHECK(*r.saved_co2_tons == 0.0012);
  CHECK(decimal_mul(3, 0.0004) == 0.0012);
  CHECK(decimal_mul(0.1, 3) == 0.3);
  for (std::int64_t k : {1, 7, 33, 250}) {
    const auto one = compute_co2eq(ledger(k));
    const auto two = compute_co2eq(ledger(2 * k));
    CHECK(two.co2_tons == doctest::Approx(2 * one.co2_tons).epsilon(1e-15));
  }
  CHECK_ERRC(compute_co2eq(ledger(-1)), Errc::NegativeOps);
  CHECK_ERRC(compute_co2eq(ledger(1, -0.1)), Errc::NegativeOps);
  CHECK_ERRC(compute_co2eq(ledger(1, 0.1, 0.0004, -5)), Errc::NegativeOps);
}

TEST_CASE("energy report") {
  EnergyReport e{{60, 30, 10}, 10, 4, {}};
  e.ledger.llm_ops = 100;
  e.ledger.baseline_ops = 130;
  const auto j = energy_json(e);
  CHECK(j["schema"] == "energy");
  CHECK(j["op_unit"] == "provider_call");
  CHECK(j["llm_ops"] == 100);
  CHECK(j["energy_kwh"].get<double>() == 10.0);
  CHECK(j["co2_tons"].get<double>() == 0.004);
  CHECK(j["saved_energy_kwh"].get<double>() == 3.0);
  CHECK(j["saved_co2_tons"].get<double>() == 0.0012);
  const auto note = j["note"].get<std::string>();
  CHECK(note.find("21 kWh") != std::string::npos);
  CHECK(note.find("0.008 t") != std::string::npos);
}

TEST_CASE("workspace reports are byte-stable under a fixed clock") {
  test::TempDir a("stable-a"), b("stable-b");
  for (const auto* dir : {&a, &b}) {
    auto ctx = make_mock_context();
    ctx.clock = fixed_clock("2026-01-01T00:00:00Z");
    auto s = run_cycle(initial_state(sample(), degrade(sample(), {0.6, false}), ctx), ctx);
    emit_reports(dir->path(), s, ctx, {}, true);
    s = advance(s, accept_all(s, "qa", ctx.clock), ctx);
    emit_reports(dir->path(), s, ctx, {}, true);
  }
  const auto sa = snapshot(a.path());
  CHECK(sa == snapshot(b.path()));
  for (std::string_view f : {"cycle-1/semantic_results.csv", "cycle-1/impact_analysis.json",
                             "cycle-1/updated_requirements.csv", "cycle-2/semantic_results.json",
                             "overall_summary.csv", "overall_summary.json", "energy.json"})
    CHECK_MESSAGE(sa.contains(std::string(f)), f);

  const auto bundle = load_report_bundle(a.path(), 1);
  CHECK(bundle["cycle"] == 1);
  CHECK(bundle["semantic_results"] == json::parse(sa.at("cycle-1/semantic_results.json"))["rows"]);
  CHECK(bundle["overall_summary"] == json::parse(sa.at("overall_summary.json"))["rows"]);
  CHECK(json::parse(sa.at("energy.json"))["note"] == std::string(kEnergyNote));
}

TEST_CASE("atomic writes replace content and report failures") {
  test::TempDir dir("atomic");
  const auto f = dir.path() / "x" / "out.txt";
  write_file_atomic(f, "one");
  write_file_atomic(f, "two");
  CHECK(read_file(f) == "two");
  CHECK(std::distance(std::filesystem::directory_iterator(f.parent_path()), {}) == 1);
  write_file_atomic(dir.path() / "blocker", "file");
  CHECK_ERRC(write_file_atomic(dir.path() / "blocker" / "child.txt", "x"), Errc::IoFailure);
  CHECK_ERRC(read_file(dir.path() / "missing.txt"), Errc::IoFailure);
}
