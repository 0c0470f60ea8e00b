#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "qeloop/config.hpp"
#include "qeloop/reporting.hpp"
#include "qeloop/workspace.hpp"

namespace httplib {
class Server;
}

namespace qeloop {

struct HttpResult {
  int status = 200;
  nlohmann::json body;
};

/// HITL review sessions behind a small JSON API.
///
///   GET  /api/v1/sessions
///   GET  /api/v1/sessions/{id}/queue
///   POST /api/v1/sessions/{id}/decisions   body: [decision...] or {"decisions": [...]}
///   POST /api/v1/sessions/{id}/advance
///   GET  /api/v1/sessions/{id}/reports?cycle=n
///
/// Each session has one writer at a time. advance marks the session Running
/// for the duration of the cycle; a concurrent advance or decision post sees
/// that state and gets 409. Reads never block on a running cycle.
class ReviewService {
 public:
  ReviewService(ServiceConfig config, EnergyLedger rates);
  ~ReviewService();

  // Registers a session persisted under `ws` (session.json, audit.jsonl,
  // reports). Replaces a session with the same id.
  void add_session(SessionFile file, std::shared_ptr<PipelineContext> ctx, Workspace ws);

  HttpResult list_sessions() const;
  HttpResult get_queue(const std::string& id) const;
  HttpResult post_decisions(const std::string& id, const std::string& body);
  HttpResult advance(const std::string& id);
  HttpResult get_reports(const std::string& id, const std::optional<std::string>& cycle) const;

  std::vector<Transition> transitions(const std::string& id) const;

  // Routes plus CORS preflight, bearer authentication and JSON error bodies.
  void mount(httplib::Server& server);

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;

  ServiceConfig config_;
  EnergyLedger rates_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// Snapshot body shared by the queue and advance endpoints.
nlohmann::json session_snapshot(const SessionFile& s);

// A fresh session: initial state from the workspace corpora and its first
// cycle, reports emitted and session.json written.
SessionFile start_session(const Workspace& ws, PipelineContext& ctx, const EnergyLedger& rates);

}  // namespace qeloop
