#include "qeloop/workspace.hpp"

#include <fstream>
#include <mutex>

#include "qeloop/error.hpp"
#include "qeloop/reporting.hpp"
#include "qeloop/serialization.hpp"
#include "qeloop/strings.hpp"

namespace qeloop {

using nlohmann::json;

bool allowed_transition(SessionStatus from, SessionStatus to) {
  if (from == SessionStatus::AwaitingReview) return to == SessionStatus::Running;
  if (from == SessionStatus::Running) return to != SessionStatus::Running;
  return false;
}

json to_json_doc(const SessionFile& s) {
  json transitions = json::array();
  for (const auto& t : s.transitions)
    transitions.push_back({{"from", to_string(t.from)}, {"to", to_string(t.to)}, {"at", t.at}});
  return {{"version", SessionFile::kVersion},
          {"session_id", s.session_id},
          {"project_id", s.project_id},
          {"state", s.state},
          {"pending", s.pending},
          {"transitions", std::move(transitions)},
          {"updated_at", s.updated_at}};
}

SessionFile session_from_json(const json& j) {
  try {
    if (j.value("version", 0) != SessionFile::kVersion)
      throw Error(Errc::InvalidConfig, "session.version", "unsupported session file version");
    SessionFile s;
    s.session_id = j.at("session_id").get<std::string>();
    s.project_id = j.at("project_id").get<std::string>();
    s.state = j.at("state").get<CycleState>();
    s.pending = j.at("pending").get<std::vector<ReviewDecision>>();
    for (const auto& t : j.at("transitions")) {
      const auto from = parse_status(t.at("from").get<std::string>());
      const auto to = parse_status(t.at("to").get<std::string>());
      if (!from || !to) throw Error(Errc::InvalidConfig, "session.transitions", "unknown status");
      s.transitions.push_back({*from, *to, t.at("at").get<std::string>()});
    }
    s.updated_at = j.at("updated_at").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, "session", e.what());
  }
}

Workspace::Workspace(std::filesystem::path project_dir, std::string project_id)
    : dir_(std::move(project_dir)), project_id_(std::move(project_id)) {}

std::filesystem::path Workspace::corpus_file(CorpusRole role) const {
  switch (role) {
    case CorpusRole::Original: return dir_ / "corpus" / "original.txt";
    case CorpusRole::Working: return dir_ / "corpus" / "working.txt";
    case CorpusRole::Derived: return dir_ / "corpus" / "derived.txt";
  }
  return {};
}

void Workspace::store_corpus(CorpusRole role, const Corpus& corpus) const {
  write_file_atomic(corpus_file(role), serialize_document(corpus));
  if (role == CorpusRole::Derived)
    write_file_atomic(dir_ / "corpus" / "derived.kind", std::string(to_string(corpus.kind)) + "\n");
}

std::optional<Corpus> Workspace::load_corpus(CorpusRole role) const {
  const auto path = corpus_file(role);
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto kind = ArtefactKind::Requirement;
  if (role == CorpusRole::Derived) {
    const auto name = str::trim(read_file(dir_ / "corpus" / "derived.kind"));
    const auto k = parse_kind(name);
    if (!k) throw Error(Errc::InvalidConfig, "derived.kind", "unknown kind: " + std::string(name));
    kind = *k;
  }
  return parse_document(kind, read_file(path), project_id_);
}

void Workspace::save_session(const SessionFile& s) const {
  write_file_atomic(session_file(), to_json_doc(s).dump(2) + "\n");
}

std::optional<SessionFile> Workspace::load_session() const {
  if (!std::filesystem::exists(session_file())) return std::nullopt;
  json j;
  try {
    j = json::parse(read_file(session_file()));
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, session_file().string(), e.what());
  }
  return session_from_json(j);
}

void Workspace::append_audit(const std::string& session_id, std::uint32_t cycle,
                             const std::vector<ReviewDecision>& ds) const {
  static std::mutex mu;
  const std::lock_guard lock(mu);
  std::filesystem::create_directories(dir_);
  std::ofstream out(audit_file(), std::ios::app | std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, audit_file().string(), "cannot open for appending");
  for (const auto& d : ds) {
    json rec{{"session_id", session_id}, {"cycle", cycle}, {"decision", d}};
    out << rec.dump() << '\n';
  }
  out.flush();
  if (!out) throw Error(Errc::IoFailure, audit_file().string(), "write failed");
}

std::vector<json> Workspace::read_audit() const {
  std::vector<json> out;
  std::ifstream in(audit_file());
  std::string line;
  while (std::getline(in, line)) {
    if (str::trim(line).empty()) continue;
    out.push_back(json::parse(line, nullptr, false));
    if (out.back().is_discarded()) out.pop_back();
  }
  return out;
}

}  // namespace qeloop
