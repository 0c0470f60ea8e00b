// qeloop command-line entry point.
//
// Exit codes: 0 success, 1 validation error, 2 provider or I/O error.
// Diagnostics go to stderr; data goes to files or stdout.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "qeloop/config.hpp"
#include "qeloop/error.hpp"
#include "qeloop/reporting.hpp"
#include "qeloop/serialization.hpp"
#include "qeloop/service.hpp"
#include "qeloop/strings.hpp"
#include "qeloop/workspace.hpp"

namespace {

using namespace qeloop;
using nlohmann::json;

struct Globals {
  std::string config = std::string(kConfigFileName);
  std::string workspace;
  std::string fixed_clock;
  std::string project = "default";
};

ProjectConfig load(const Globals& g) {
  auto cfg = load_config(g.config);
  if (!g.workspace.empty()) cfg.workspace = std::filesystem::absolute(g.workspace);
  if (!g.fixed_clock.empty()) cfg.fixed_clock = g.fixed_clock;
  return cfg;
}

Workspace open_workspace(const ProjectConfig& cfg, const std::string& project) {
  return Workspace(cfg.project_dir(project), project);
}

void print_summary(std::ostream& out, const std::vector<SummaryRecord>& history) {
  char line[256];
  std::snprintf(line, sizeof line, "%-5s %-8s %-13s %-7s %-7s %-7s %-7s %-7s %-7s %s\n", "cycle", "cosine", "H/M/L/N",
                "clar", "compl", "test", "cons", "align", "rubric", "ops(f/r/j)");
  out << line;
  for (const auto& r : history) {
    const auto& h = r.histogram;
    const std::string hist = std::to_string(h.high) + "/" + std::to_string(h.medium) + "/" + std::to_string(h.low) +
                             "/" + std::to_string(h.no_match);
    const std::string ops =
        std::to_string(r.ops.forward) + "/" + std::to_string(r.ops.reverse) + "/" + std::to_string(r.ops.judge);
    std::snprintf(line, sizeof line, "%-5u %-8s %-13s %-7s %-7s %-7s %-7s %-7s %-7s %s\n", r.cycle,
                  str::fixed(r.mean_cosine).c_str(), hist.c_str(), str::fixed(r.clarity, 2).c_str(),
                  str::fixed(r.completeness, 2).c_str(), str::fixed(r.testability, 2).c_str(),
                  str::fixed(r.consistency, 2).c_str(), str::fixed(r.semantic_alignment, 2).c_str(),
                  str::fixed(r.mean_rubric(), 2).c_str(), ops.c_str());
    out << line;
  }
}

// Previous run output; the audit log and embedding cache are kept.
void clear_run_output(const Workspace& ws) {
  std::error_code ec;
  if (!std::filesystem::exists(ws.dir())) return;
  for (const auto& entry : std::filesystem::directory_iterator(ws.dir())) {
    const auto name = entry.path().filename().string();
    if (name.rfind("cycle-", 0) == 0 || name.rfind("overall_summary.", 0) == 0 || name == "energy.json" ||
        name == "session.json")
      std::filesystem::remove_all(entry.path(), ec);
  }
}

int cmd_ingest(const Globals& g, const std::string& kind_name, const std::string& role_name, const std::string& file) {
  const auto cfg = load(g);
  const auto kind = parse_kind(kind_name);
  if (!kind) throw Error(Errc::WrongKind, kind_name, "expected requirement, testcase or bdd");
  CorpusRole role = *kind == ArtefactKind::Requirement ? CorpusRole::Original : CorpusRole::Derived;
  if (role_name == "working") role = CorpusRole::Working;
  else if (role_name == "original") role = CorpusRole::Original;
  else if (role_name == "derived") role = CorpusRole::Derived;
  else if (!role_name.empty()) throw Error(Errc::InvalidConfig, "--role", "expected original, working or derived");
  if ((role == CorpusRole::Derived) != (*kind != ArtefactKind::Requirement))
    throw Error(Errc::WrongKind, kind_name, "derived corpora hold test cases or scenarios, the others requirements");

  const auto corpus = parse_document(*kind, read_file(file), g.project);
  validate(corpus);
  const auto ws = open_workspace(cfg, g.project);
  ws.store_corpus(role, corpus);
  std::cout << "ingested " << corpus.size() << " " << to_string(*kind) << " artefact(s) into "
            << ws.corpus_file(role).string() << "\n";
  return 0;
}

int cmd_run(const Globals& g, const std::string& provider, std::uint32_t max_cycles, const std::string& review,
            double degrade_level) {
  auto cfg = load(g);
  if (max_cycles > 0) cfg.convergence.max_cycles = max_cycles;
  if (review != "auto" && review != "manual") throw Error(Errc::InvalidConfig, "--review", "expected auto or manual");
  const auto ws = open_workspace(cfg, g.project);
  clear_run_output(ws);
  if (degrade_level > 0.0) {
    const auto original = ws.load_corpus(CorpusRole::Original);
    if (!original) throw Error(Errc::EmptyCorpus, g.project, "no requirements ingested");
    ws.store_corpus(CorpusRole::Working, degrade(*original, {degrade_level, false}, load_lexicons(cfg)));
  }
  auto ctx = build_context(cfg, ws.dir(), provider.empty() ? std::nullopt : std::optional<std::string>(provider));

  auto session = start_session(ws, ctx, cfg.energy);
  while (review == "auto" && session.state.status == SessionStatus::AwaitingReview) {
    const auto decisions = accept_all(session.state, "auto", ctx.clock);
    ws.append_audit(session.session_id, static_cast<std::uint32_t>(session.state.history.size()), decisions);
    const auto before = session.state.history.size();
    auto next = advance(session.state, decisions, ctx);
    emit_reports(ws.dir(), next, ctx, cfg.energy, next.history.size() > before);
    session.transitions.push_back({SessionStatus::AwaitingReview, SessionStatus::Running, ctx.clock()});
    session.transitions.push_back({SessionStatus::Running, next.status, ctx.clock()});
    session.state = std::move(next);
    session.updated_at = ctx.clock();
    ws.save_session(session);
  }
  print_summary(std::cout, session.state.history);
  std::cout << "status: " << to_string(session.state.status) << "\n";
  return 0;
}

int cmd_negative(const Globals& g, double level, bool no_injection, double min_level) {
  const auto cfg = load(g);
  const auto ws = open_workspace(cfg, g.project);
  const auto original = ws.load_corpus(CorpusRole::Original);
  if (!original) throw Error(Errc::EmptyCorpus, g.project, "no requirements ingested");
  auto ctx = build_context(cfg, ws.dir());
  const auto report = negative_validation(*original, {level, !no_injection}, ctx, min_level);
  const json j = report;
  write_file_atomic(ws.dir() / "negative_validation.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_report(const Globals& g, std::uint32_t cycle, bool as_json) {
  const auto cfg = load(g);
  const auto ws = open_workspace(cfg, g.project);
  const auto summary_file = ws.dir() / "overall_summary.json";
  if (!std::filesystem::exists(summary_file))
    throw Error(Errc::NoCyclesCompleted, g.project, "no cycles completed");
  const auto history = parse_overall_summary_json(json::parse(read_file(summary_file)));
  if (history.empty()) throw Error(Errc::NoCyclesCompleted, g.project, "no cycles completed");
  if (cycle > history.size())
    throw Error(Errc::CycleLimitExceeded, std::to_string(cycle),
                "only " + std::to_string(history.size()) + " cycle(s) completed");

  if (as_json) {
    json out = cycle ? load_report_bundle(ws.dir(), cycle) : json{{"overall_summary", to_json_doc(history)["rows"]}};
    out["energy"] = json::parse(read_file(ws.dir() / "energy.json"));
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  if (cycle == 0) {
    print_summary(std::cout, history);
    return 0;
  }
  print_summary(std::cout, {history[cycle - 1]});
  const auto rows = parse_semantic_results_json(json::parse(read_file(cycle_dir(ws.dir(), cycle) / "semantic_results.json")));
  std::cout << "\n";
  for (const auto& r : rows)
    std::cout << r.left_id << " -> " << r.right_id.value_or("-") << "  " << str::fixed(r.cosine) << "  "
              << to_string(r.category) << "  " << (r.action ? to_string(*r.action) : "-") << "\n";
  return 0;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Globals& g, const std::string& host, int port) {
  auto cfg = load(g);
  if (!host.empty()) cfg.service.host = host;
  if (port > 0) cfg.service.port = port;
  const auto ws = open_workspace(cfg, g.project);
  auto ctx = std::make_shared<PipelineContext>(build_context(cfg, ws.dir()));
  auto session = ws.load_session();
  if (!session) session = start_session(ws, *ctx, cfg.energy);

  ReviewService service(cfg.service, cfg.energy);
  service.add_session(std::move(*session), ctx, ws);
  httplib::Server server;
  service.mount(server);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cerr << "serving project " << g.project << " on http://" << cfg.service.host << ":" << cfg.service.port << "\n";
  if (!server.listen(cfg.service.host, cfg.service.port))
    throw Error(Errc::IoFailure, cfg.service.host + ":" + std::to_string(cfg.service.port), "cannot listen");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qeloop: closed-loop validation of generated QE artefacts"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Project configuration file")->capture_default_str();
  app.add_option("--workspace", g.workspace, "Workspace directory (overrides the configuration)");
  app.add_option("--fixed-clock", g.fixed_clock, "Use this ISO-8601 timestamp for every clock reading");

  auto* ingest = app.add_subcommand("ingest", "Parse a corpus file and store it in the workspace");
  std::string kind, role, file;
  ingest->add_option("--kind", kind, "requirement, testcase or bdd")->required();
  ingest->add_option("--role", role, "original, working or derived (default by kind)");
  ingest->add_option("--project", g.project, "Project id")->capture_default_str();
  ingest->add_option("file", file, "Input document")->required();

  auto* run = app.add_subcommand("run", "Run the refinement loop and emit reports");
  std::string provider, review = "auto";
  std::uint32_t max_cycles = 0;
  double degrade_level = 0.0;
  run->add_option("--project", g.project, "Project id")->capture_default_str();
  run->add_option("--provider", provider, "mock or remote (default from configuration)");
  run->add_option("--max-cycles", max_cycles, "Override the cycle limit");
  run->add_option("--review", review, "auto applies every suggestion; manual stops after cycle 1")
      ->capture_default_str();
  run->add_option("--degrade", degrade_level, "Start from a copy of the requirements degraded at this level");

  auto* neg = app.add_subcommand("negative-validate", "Check that a degraded corpus is detected");
  double level = 0.0, min_level = 0.5;
  bool no_injection = false;
  neg->add_option("--project", g.project, "Project id")->capture_default_str();
  neg->add_option("--level", level, "Degradation level d in [0, 1]")->required();
  neg->add_option("--min-level", min_level, "Lowest level treated as a meaningful test")->capture_default_str();
  neg->add_flag("--no-injection", no_injection, "Do not append ambiguity phrases");

  auto* report = app.add_subcommand("report", "Print the summary of completed cycles");
  std::uint32_t cycle = 0;
  bool as_json = false;
  report->add_option("--project", g.project, "Project id")->capture_default_str();
  report->add_option("--cycle", cycle, "Show one cycle");
  report->add_flag("--json", as_json, "Machine-readable output");

  auto* serve = app.add_subcommand("serve", "Serve the review API for a project");
  std::string host;
  int port = 0;
  serve->add_option("--project", g.project, "Project id")->capture_default_str();
  serve->add_option("--host", host, "Listen address (default from configuration)");
  serve->add_option("--port", port, "Listen port (default from configuration)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(g, kind, role, file);
    if (*run) return cmd_run(g, provider, max_cycles, review, degrade_level);
    if (*neg) return cmd_negative(g, level, no_injection, min_level);
    if (*report) return cmd_report(g, cycle, as_json);
    if (*serve) return cmd_serve(g, host, port);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
