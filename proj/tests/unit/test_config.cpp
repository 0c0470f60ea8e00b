#include <cstdlib>

#include "qeloop/config.hpp"
#include "support.hpp"

using namespace qeloop;
using nlohmann::json;

TEST_CASE("shipped word lists equal the built-in lexicons") {
  const std::filesystem::path dir = QELOOP_CONFIG_DIR;
  const auto& d = Lexicons::defaults();
  CHECK(load_word_list(dir / "stopwords.txt") == d.stopwords);
  CHECK(load_word_list(dir / "verbs.txt") == d.verbs);
  CHECK(load_word_list(dir / "ambiguity.txt") == d.ambiguity);
  CHECK(load_word_list(dir / "actors.txt") == d.actors);
  CHECK(load_word_list(dir / "outcomes.txt") == d.outcomes);
  CHECK(load_word_list(dir / "negations.txt") == d.negations);
  CHECK(load_word_list(dir / "units.txt") == d.units);
}

TEST_CASE("defaults and a missing file") {
  test::TempDir dir("cfg");
  const auto cfg = load_config(dir.path() / "qeloop.json");
  CHECK(cfg.base_dir == dir.path());
  CHECK(cfg.generation_provider == "mock");
  CHECK(cfg.batch_size == 10);
  CHECK(cfg.energy.energy_per_op_kwh == 0.1);
  CHECK(cfg.energy.grid_factor_tons_per_kwh == 0.0004);
  CHECK(cfg.convergence.max_cycles == 3);
  CHECK(cfg.project_dir("p") == dir.path() / "workspace" / "p");
}

TEST_CASE("sample configuration parses and round-trips") {
  const auto cfg = load_config(test::samples_dir() / "banking" / "qeloop.json");
  CHECK(cfg.derived_kind == ArtefactKind::TestCase);
  CHECK(cfg.thresholds.at(ArtefactKind::BddScenario) == Thresholds{});
  const auto again = parse_config(config_to_json(cfg), cfg.base_dir);
  CHECK(config_to_json(again) == config_to_json(cfg));
}

TEST_CASE("invalid configurations") {
  CHECK_ERRC(parse_config(json{{"generation", {{"provider", "other"}}}}), Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"generation", {{"provider", "remote"}}}}), Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"generation", {{"batch_size", 0}}}}), Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"derived_kind", "requirement"}}), Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"derived_kind", "spreadsheet"}}), Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"thresholds", {{"testcase", {{"high", 0.5}, {"medium", 0.6}, {"low", 0.3}}}}}}),
             Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"energy", {{"energy_per_op_kwh", -1}}}}), Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"embedding", {{"provider", "remote"}, {"url", "http://x"}}}}), Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"rubric", {{"backend", "oracle"}}}}), Errc::InvalidConfig);
  CHECK_ERRC(parse_config(json{{"convergence", {{"max_cycles", "three"}}}}), Errc::InvalidConfig);
}

TEST_CASE("service token comes from the environment when set") {
  ::setenv(std::string(kServiceTokenEnv).c_str(), "from-env", 1);
  auto cfg = parse_config(json{{"service", {{"bearer_token", "from-file"}}}});
  CHECK(cfg.service.bearer_token == "from-env");
  ::unsetenv(std::string(kServiceTokenEnv).c_str());
  cfg = parse_config(json{{"service", {{"bearer_token", "from-file"}}}});
  CHECK(cfg.service.bearer_token == "from-file");
}

TEST_CASE("lexicon overrides and clock") {
  test::TempDir dir("lex");
  write_file_atomic(dir.path() / "verbs.txt", "# custom\nfrobnicate\n");
  auto cfg = parse_config(json{{"lexicons", {{"verbs", "verbs.txt"}}}, {"fixed_clock", "2026-02-03T04:05:06Z"}},
                          dir.path());
  const auto lex = load_lexicons(cfg);
  CHECK(lex.verbs == WordSet{"frobnicate"});
  CHECK(lex.stopwords == Lexicons::defaults().stopwords);
  CHECK(make_clock(cfg)() == "2026-02-03T04:05:06Z");
  CHECK_ERRC(parse_config(json{{"lexicons", {{"adverbs", "x.txt"}}}}, dir.path()), Errc::InvalidConfig);
}

TEST_CASE("context from configuration") {
  test::TempDir dir("ctx");
  auto cfg = parse_config(json{{"derived_kind", "bdd"}}, dir.path());
  auto ctx = build_context(cfg, dir.path() / "p");
  CHECK(ctx.derived_kind == ArtefactKind::BddScenario);
  CHECK(ctx.generator->provider_id() == "mock-v1");
  CHECK(ctx.rubric->id() == "heuristic-v1");
  (void)ctx.embedder->embed("persist me");
  CHECK(std::filesystem::exists(dir.path() / "p" / "embeddings.jsonl"));
  CHECK_ERRC(build_context(cfg, std::nullopt, std::string("nonsense")), Errc::InvalidConfig);
}
