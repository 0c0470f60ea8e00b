#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>

#include "qeloop/service.hpp"
#include "support.hpp"

using namespace qeloop;
using nlohmann::json;

namespace {

Corpus sample() { return parse_requirements(read_file(test::samples_dir() / "banking" / "requirements.txt"), "banking"); }

// Mock provider that can be slowed down or switched off.
class ControlledProvider final : public GenerationProvider {
 public:
  std::string id() const override { return mock_.id(); }
  std::string generate(const GenerationRequest& r) override {
    if (fail) throw Error(Errc::ProviderUnavailable, id(), "switched off");
    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms.load()));
    return mock_.generate(r);
  }
  std::atomic<int> delay_ms{0};
  std::atomic<bool> fail{false};

 private:
  MockGenerationProvider mock_;
};

struct Harness {
  test::TempDir dir{"service"};
  std::shared_ptr<ControlledProvider> provider = std::make_shared<ControlledProvider>();
  ServiceConfig config;
  std::unique_ptr<ReviewService> service;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit Harness(double degradation = 0.6, std::uint32_t max_cycles = 3, std::string token = {}) {
    config.bearer_token = std::move(token);
    service = std::make_unique<ReviewService>(config, EnergyLedger{});
    add("banking", degradation, max_cycles);
    service->mount(server);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Harness() {
    server.stop();
    thread.join();
  }

  void add(const std::string& id, double degradation, std::uint32_t max_cycles) {
    Workspace ws(dir.path() / id, id);
    ws.store_corpus(CorpusRole::Original, sample());
    ws.store_corpus(CorpusRole::Working, degrade(sample(), {degradation, false}));
    auto ctx = std::make_shared<PipelineContext>(make_mock_context());
    ctx->generator = std::make_shared<Generator>(provider);
    ctx->convergence.max_cycles = max_cycles;
    ctx->clock = fixed_clock("2026-01-01T00:00:00Z");
    auto file = start_session(ws, *ctx, {});
    service->add_session(std::move(file), ctx, ws);
  }

  httplib::Client client(bool auth = true) const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    if (auth && !config.bearer_token.empty()) c.set_bearer_token_auth(config.bearer_token);
    return c;
  }

  std::pair<int, json> get(const std::string& path) const {
    auto c = client();
    auto r = c.Get(path);
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body)};
  }
  std::pair<int, json> post(const std::string& path, const std::string& body) const {
    auto c = client();
    auto r = c.Post(path, body, "application/json");
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body)};
  }
};

json decisions_for(const json& queue) {
  json out = json::array();
  for (const auto& item : queue) {
    json d{{"pair_id", item["pair_id"]}, {"verdict", item["action"]}, {"reviewer", "qa"}};
    if (item["scope"] == "cross" && item["action"] == "Refine") d["edited_text"] = item["pair"]["left"]["text"];
    out.push_back(d);
  }
  return out;
}

}  // namespace

TEST_CASE("queue of a fresh degraded session") {
  Harness h;
  auto [status, body] = h.get("/api/v1/sessions/banking/queue");
  CHECK(status == 200);
  CHECK(body["status"] == "AwaitingReview");
  CHECK(body["cycle"] == 1);
  REQUIRE_FALSE(body["queue"].empty());
  bool refine = false, coverage = false;
  for (const auto& item : body["queue"]) {
    refine |= item["action"] == "Refine";
    coverage |= item["action"] == "AddCoverage";
  }
  CHECK(refine);
  CHECK(coverage);

  std::tie(status, body) = h.get("/api/v1/sessions");
  CHECK(status == 200);
  CHECK(body["sessions"].size() == 1);
  CHECK(h.get("/api/v1/sessions/nope/queue").first == 404);
  CHECK(h.get("/api/v1/sessions/nope/queue").second["error"] == "UnknownSession");
  CHECK(h.get("/api/v1/elsewhere").first == 404);
}

TEST_CASE("decision posting") {
  Harness h;
  const auto queue = h.get("/api/v1/sessions/banking/queue").second["queue"];
  const auto all = decisions_for(queue);
  auto [status, body] = h.post("/api/v1/sessions/banking/decisions", json::array({all[0]}).dump());
  CHECK(status == 200);
  CHECK(body["accepted"] == 1);
  CHECK(h.post("/api/v1/sessions/banking/decisions", json::array({all[0]}).dump()).first == 409);
  json unknown{{"pair_id", "cross:NOPE#0:-"}, {"verdict", "Refine"}};
  CHECK(h.post("/api/v1/sessions/banking/decisions", json::array({unknown}).dump()).first == 422);
  CHECK(h.post("/api/v1/sessions/banking/decisions", "{not json").first == 400);
  CHECK(h.post("/api/v1/sessions/nope/decisions", "[]").first == 404);
  // Wrapped form; a rejected batch leaves nothing behind.
  json batch = json::array({all[1], unknown});
  CHECK(h.post("/api/v1/sessions/banking/decisions", json{{"decisions", batch}}.dump()).first == 422);
  CHECK(h.get("/api/v1/sessions/banking/queue").second["pending_decisions"] == 1);

  Workspace ws(h.dir.path() / "banking", "banking");
  const auto audit = ws.read_audit();
  REQUIRE(audit.size() == 1);
  CHECK(audit[0]["decision"]["reviewer"] == "qa");
  CHECK(ws.load_session()->pending.size() == 1);
}

TEST_CASE("advance runs the next cycle and reports match the disk") {
  Harness h;
  const auto queue = h.get("/api/v1/sessions/banking/queue").second["queue"];
  REQUIRE(h.post("/api/v1/sessions/banking/decisions", decisions_for(queue).dump()).first == 200);
  auto [status, body] = h.post("/api/v1/sessions/banking/advance", "");
  CHECK(status == 200);
  CHECK(body["cycle"] == 2);
  CHECK(body["status"] == "Converged");
  CHECK(body["queue"].empty());
  CHECK(h.get("/api/v1/sessions/banking/queue").second["status"] == "Converged");
  CHECK(h.post("/api/v1/sessions/banking/advance", "").first == 409);
  CHECK(h.post("/api/v1/sessions/banking/decisions", "[]").first == 409);

  std::tie(status, body) = h.get("/api/v1/sessions/banking/reports?cycle=1");
  CHECK(status == 200);
  const auto dir = h.dir.path() / "banking";
  CHECK(body["semantic_results"] == json::parse(read_file(dir / "cycle-1" / "semantic_results.json"))["rows"]);
  CHECK(body["impact_analysis"] == json::parse(read_file(dir / "cycle-1" / "impact_analysis.json"))["rows"]);
  CHECK(body["energy"] == json::parse(read_file(dir / "energy.json")));
  CHECK(h.get("/api/v1/sessions/banking/reports").second["cycle"] == 2);
  CHECK(h.get("/api/v1/sessions/banking/reports?cycle=5").first == 416);
  CHECK(h.get("/api/v1/sessions/banking/reports?cycle=0").first == 416);
  CHECK(h.get("/api/v1/sessions/banking/reports?cycle=x").first == 400);

  using S = SessionStatus;
  CHECK(h.service->transitions("banking") ==
        std::vector<Transition>{{S::AwaitingReview, S::Running, "2026-01-01T00:00:00Z"},
                                {S::Running, S::Converged, "2026-01-01T00:00:00Z"}});
}

TEST_CASE("advance at the cycle limit ends in CycleLimit") {
  Harness h(0.6, 1);
  auto [status, body] = h.post("/api/v1/sessions/banking/advance", "");
  CHECK(status == 200);
  CHECK(body["status"] == "CycleLimit");
  CHECK(body["cycle"] == 1);
}

TEST_CASE("concurrent advance has exactly one winner") {
  Harness h;
  h.provider->delay_ms = 150;
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 2; ++i)
    threads.emplace_back([&] {
      const auto s = h.post("/api/v1/sessions/banking/advance", "").first;
      if (s == 200) ++ok;
      if (s == 409) ++conflict;
    });
  for (auto& t : threads) t.join();
  CHECK(ok == 1);
  CHECK(conflict == 1);
}

TEST_CASE("provider failure rolls the session back") {
  Harness h;
  const auto before = h.get("/api/v1/sessions/banking/queue").second;
  h.provider->fail = true;
  auto [status, body] = h.post("/api/v1/sessions/banking/advance", "");
  CHECK(status == 502);
  CHECK(body["error"] == "ProviderUnavailable");
  h.provider->fail = false;
  const auto after = h.get("/api/v1/sessions/banking/queue").second;
  CHECK(after["status"] == "AwaitingReview");
  CHECK(after["queue"] == before["queue"]);
  CHECK(h.post("/api/v1/sessions/banking/advance", "").first == 200);
}

TEST_CASE("bearer token and CORS") {
  Harness h(0.6, 3, "secret");
  auto anon = h.client(false);
  auto r = anon.Get("/api/v1/sessions");
  REQUIRE(r);
  CHECK(r->status == 401);
  CHECK(h.get("/api/v1/sessions").first == 200);
  r = anon.Options("/api/v1/sessions/banking/decisions");
  REQUIRE(r);
  CHECK(r->status == 204);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
  CHECK(r->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("an undegraded session starts converged") {
  Harness h(0.0);
  const auto body = h.get("/api/v1/sessions/banking/queue").second;
  CHECK(body["status"] == "Converged");
  CHECK(body["queue"].empty());
}
