#include "qeloop/service.hpp"

#include <charconv>
#include <set>

#include <httplib.h>

#include "qeloop/error.hpp"
#include "qeloop/serialization.hpp"

namespace qeloop {

using nlohmann::json;

struct ReviewService::Session {
  mutable std::mutex mu;  // guards file; never held while a cycle runs
  SessionFile file;
  std::shared_ptr<PipelineContext> ctx;
  Workspace ws;

  Session(SessionFile f, std::shared_ptr<PipelineContext> c, Workspace w)
      : file(std::move(f)), ctx(std::move(c)), ws(std::move(w)) {}

  void transition(SessionStatus to) {
    file.transitions.push_back({file.state.status, to, ctx->clock()});
    file.state.status = to;
    file.updated_at = ctx->clock();
  }
};

namespace {

HttpResult error_result(int status, std::string_view code, const std::string& message) {
  return {status, json{{"error", code}, {"message", message}}};
}

HttpResult unknown_session(const std::string& id) {
  return error_result(404, "UnknownSession", "no session with id " + id);
}

int status_for(const Error& e) {
  switch (e.code()) {
    case Errc::UnknownPairId:
    case Errc::InvalidDecision: return 422;
    case Errc::ConflictingDecisions: return 409;
    case Errc::ProviderUnavailable:
    case Errc::MalformedProviderOutput: return 502;
    case Errc::IoFailure: return 500;
    default: return is_validation_error(e.code()) ? 422 : 500;
  }
}

HttpResult from_error(const Error& e) { return error_result(status_for(e), errc_name(e.code()), e.what()); }

}  // namespace

json session_snapshot(const SessionFile& s) {
  const auto& st = s.state;
  return {{"session_id", s.session_id},
          {"project_id", s.project_id},
          {"cycle", st.history.size()},
          {"status", to_string(st.status)},
          {"final_review", st.final_review},
          {"pending_decisions", s.pending.size()},
          {"queue", st.queue},
          {"summary", st.history.empty() ? json(nullptr) : json(st.history.back())}};
}

SessionFile start_session(const Workspace& ws, PipelineContext& ctx, const EnergyLedger& rates) {
  auto original = ws.load_corpus(CorpusRole::Original);
  if (!original) throw Error(Errc::EmptyCorpus, ws.corpus_file(CorpusRole::Original).string(), "no requirements ingested");
  auto working = ws.load_corpus(CorpusRole::Working).value_or(*original);
  auto derived = ws.load_corpus(CorpusRole::Derived);
  if (derived) ctx.derived_kind = derived->kind;

  auto state = run_cycle(initial_state(*original, std::move(working), ctx, std::move(derived)), ctx);
  emit_reports(ws.dir(), state, ctx, rates, true);
  SessionFile s;
  s.session_id = ws.project_id();
  s.project_id = ws.project_id();
  s.state = std::move(state);
  s.updated_at = ctx.clock();
  ws.save_session(s);
  return s;
}

ReviewService::ReviewService(ServiceConfig config, EnergyLedger rates)
    : config_(std::move(config)), rates_(std::move(rates)) {}

ReviewService::~ReviewService() = default;

void ReviewService::add_session(SessionFile file, std::shared_ptr<PipelineContext> ctx, Workspace ws) {
  ctx->generator->stats().restore(file.state.ops);
  if (file.state.status == SessionStatus::Running) {
    // Interrupted mid-cycle; the persisted state predates the cycle.
    file.transitions.push_back({SessionStatus::Running, SessionStatus::AwaitingReview, ctx->clock()});
    file.state.status = SessionStatus::AwaitingReview;
  }
  const auto id = file.session_id;
  auto session = std::make_shared<Session>(std::move(file), std::move(ctx), std::move(ws));
  const std::unique_lock lock(mu_);
  sessions_[id] = std::move(session);
}

std::shared_ptr<ReviewService::Session> ReviewService::find(const std::string& id) const {
  const std::shared_lock lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

HttpResult ReviewService::list_sessions() const {
  json arr = json::array();
  const std::shared_lock lock(mu_);
  for (const auto& [id, s] : sessions_) {
    const std::lock_guard sl(s->mu);
    arr.push_back({{"session_id", id},
                   {"project_id", s->file.project_id},
                   {"cycle", s->file.state.history.size()},
                   {"status", to_string(s->file.state.status)},
                   {"queue_length", s->file.state.queue.size()}});
  }
  return {200, json{{"sessions", std::move(arr)}}};
}

HttpResult ReviewService::get_queue(const std::string& id) const {
  const auto s = find(id);
  if (!s) return unknown_session(id);
  const std::lock_guard lock(s->mu);
  return {200, session_snapshot(s->file)};
}

HttpResult ReviewService::post_decisions(const std::string& id, const std::string& body) {
  const auto s = find(id);
  if (!s) return unknown_session(id);

  std::vector<ReviewDecision> incoming;
  try {
    const auto j = json::parse(body);
    const auto& arr = j.is_object() ? j.at("decisions") : j;
    if (!arr.is_array()) return error_result(400, "BadRequest", "expected an array of decisions");
    incoming = arr.get<std::vector<ReviewDecision>>();
  } catch (const json::exception& e) {
    return error_result(400, "BadRequest", e.what());
  } catch (const Error& e) {
    return error_result(422, "InvalidDecision", e.what());
  }

  const std::lock_guard lock(s->mu);
  if (s->file.state.status != SessionStatus::AwaitingReview)
    return error_result(409, "WrongState", "session is " + std::string(to_string(s->file.state.status)));

  std::set<std::string> seen;
  for (const auto& d : s->file.pending) seen.insert(d.pair_id);
  for (auto& d : incoming) {
    if (!seen.insert(d.pair_id).second)
      return error_result(409, "ConflictingDecisions", "pair already decided: " + d.pair_id);
    if (d.reviewer.empty()) d.reviewer = "anonymous";
    if (d.decided_at.empty()) d.decided_at = s->ctx->clock();
  }
  auto all = s->file.pending;
  all.insert(all.end(), incoming.begin(), incoming.end());
  try {
    (void)apply_decisions(s->file.state, all);  // validation only
    s->ws.append_audit(s->file.session_id, static_cast<std::uint32_t>(s->file.state.history.size()), incoming);
    s->file.pending = std::move(all);
    s->file.updated_at = s->ctx->clock();
    s->ws.save_session(s->file);
  } catch (const Error& e) {
    return from_error(e);
  }
  return {200, json{{"accepted", incoming.size()}}};
}

HttpResult ReviewService::advance(const std::string& id) {
  const auto s = find(id);
  if (!s) return unknown_session(id);

  CycleState before;
  std::vector<ReviewDecision> decisions;
  {
    const std::lock_guard lock(s->mu);
    if (s->file.state.status != SessionStatus::AwaitingReview)
      return error_result(409, "WrongState", "session is " + std::string(to_string(s->file.state.status)));
    before = s->file.state;
    decisions = s->file.pending;
    s->transition(SessionStatus::Running);
  }

  try {
    auto after = qeloop::advance(before, decisions, *s->ctx);
    const bool ran = after.history.size() > before.history.size();
    emit_reports(s->ws.dir(), after, *s->ctx, rates_, ran);
    const std::lock_guard lock(s->mu);
    const auto status = after.status;
    after.status = SessionStatus::Running;
    s->file.state = std::move(after);
    s->file.pending.clear();
    s->transition(status);
    s->ws.save_session(s->file);
    return {200, session_snapshot(s->file)};
  } catch (const Error& e) {
    const std::lock_guard lock(s->mu);
    s->file.state = std::move(before);
    s->file.state.status = SessionStatus::Running;
    s->transition(SessionStatus::AwaitingReview);
    s->ctx->generator->stats().restore(s->file.state.ops);
    try {
      s->ws.save_session(s->file);
    } catch (const Error&) {
    }
    return from_error(e);
  }
}

HttpResult ReviewService::get_reports(const std::string& id, const std::optional<std::string>& cycle) const {
  const auto s = find(id);
  if (!s) return unknown_session(id);
  std::size_t completed = 0;
  {
    const std::lock_guard lock(s->mu);
    completed = s->file.state.history.size();
  }
  std::size_t n = completed;
  if (cycle) {
    const auto* b = cycle->data();
    const auto* e = b + cycle->size();
    const auto r = std::from_chars(b, e, n);
    if (r.ec != std::errc() || r.ptr != e) return error_result(400, "BadRequest", "cycle must be a positive integer");
  }
  if (n == 0 || n > completed)
    return error_result(416, "CycleOutOfRange",
                        "cycle " + std::to_string(n) + " outside 1.." + std::to_string(completed));
  try {
    auto bundle = load_report_bundle(s->ws.dir(), static_cast<std::uint32_t>(n));
    bundle["session_id"] = id;
    bundle["energy"] = json::parse(read_file(s->ws.dir() / "energy.json"));
    return {200, std::move(bundle)};
  } catch (const Error& e) {
    return from_error(e);
  }
}

std::vector<Transition> ReviewService::transitions(const std::string& id) const {
  const auto s = find(id);
  if (!s) return {};
  const std::lock_guard lock(s->mu);
  return s->file.transitions;
}

void ReviewService::mount(httplib::Server& server) {
  using httplib::Request;
  using httplib::Response;
  auto reply = [](Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };

  server.set_pre_routing_handler([this, reply](const Request& req, Response& res) {
    if (req.method == "OPTIONS") {
      res.status = 204;
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
      res.set_header("Access-Control-Max-Age", "600");
      return httplib::Server::HandlerResponse::Handled;
    }
    if (!config_.bearer_token.empty() && req.get_header_value("Authorization") != "Bearer " + config_.bearer_token) {
      reply(res, error_result(401, "Unauthorized", "missing or invalid bearer token"));
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });
  server.set_post_routing_handler([this](const Request&, Response& res) {
    if (!config_.cors_origin.empty()) {
      res.set_header("Access-Control-Allow-Origin", config_.cors_origin);
      res.set_header("Vary", "Origin");
    }
  });
  server.set_error_handler([reply](const Request& req, Response& res) {
    if (!res.body.empty()) return;
    reply(res, error_result(res.status, res.status == 404 ? "NotFound" : "Error", "no route for " + req.path));
  });
  server.set_exception_handler([reply](const Request&, Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, error_result(500, "Internal", what));
  });

  server.Get("/api/v1/sessions", [this, reply](const Request&, Response& res) { reply(res, list_sessions()); });
  server.Get(R"(/api/v1/sessions/([^/]+)/queue)",
             [this, reply](const Request& req, Response& res) { reply(res, get_queue(req.matches[1])); });
  server.Post(R"(/api/v1/sessions/([^/]+)/decisions)", [this, reply](const Request& req, Response& res) {
    reply(res, post_decisions(req.matches[1], req.body));
  });
  server.Post(R"(/api/v1/sessions/([^/]+)/advance)",
              [this, reply](const Request& req, Response& res) { reply(res, advance(req.matches[1])); });
  server.Get(R"(/api/v1/sessions/([^/]+)/reports)", [this, reply](const Request& req, Response& res) {
    std::optional<std::string> cycle;
    if (req.has_param("cycle")) cycle = req.get_param_value("cycle");
    reply(res, get_reports(req.matches[1], cycle));
  });
}

}  // namespace qeloop
