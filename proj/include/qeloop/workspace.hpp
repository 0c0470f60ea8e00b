#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qeloop/orchestrator.hpp"

namespace qeloop {

// Layout under <workspace>/<project>/:
//   corpus/original.txt   requirements as ingested
//   corpus/working.txt    optional starting text (e.g. a degraded copy)
//   corpus/derived.txt    optional ingested test cases or .feature text
//   corpus/derived.kind   kind name of derived.txt
//   session.json          versioned session state
//   audit.jsonl           one accepted decision per line
//   embeddings.jsonl      embedding cache
//   cycle-<n>/, overall_summary.*, energy.json   reports
enum class CorpusRole { Original, Working, Derived };

struct Transition {
  SessionStatus from = SessionStatus::AwaitingReview;
  SessionStatus to = SessionStatus::AwaitingReview;
  std::string at;

  friend bool operator==(const Transition&, const Transition&) = default;
};

// AwaitingReview -> Running -> {AwaitingReview, Converged, CycleLimit}.
bool allowed_transition(SessionStatus from, SessionStatus to);

struct SessionFile {
  static constexpr int kVersion = 1;
  std::string session_id;
  std::string project_id;
  CycleState state;
  std::vector<ReviewDecision> pending;  // accepted, applied on the next advance
  std::vector<Transition> transitions;
  std::string updated_at;
};

nlohmann::json to_json_doc(const SessionFile& s);
// Throws InvalidConfig for an unsupported version or malformed content.
SessionFile session_from_json(const nlohmann::json& j);

class Workspace {
 public:
  Workspace(std::filesystem::path project_dir, std::string project_id);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& project_id() const { return project_id_; }

  std::filesystem::path corpus_file(CorpusRole role) const;
  std::filesystem::path session_file() const { return dir_ / "session.json"; }
  std::filesystem::path audit_file() const { return dir_ / "audit.jsonl"; }

  // Canonical document text; derived corpora also record their kind.
  void store_corpus(CorpusRole role, const Corpus& corpus) const;
  std::optional<Corpus> load_corpus(CorpusRole role) const;

  void save_session(const SessionFile& s) const;
  std::optional<SessionFile> load_session() const;

  void append_audit(const std::string& session_id, std::uint32_t cycle, const std::vector<ReviewDecision>& ds) const;
  std::vector<nlohmann::json> read_audit() const;

 private:
  std::filesystem::path dir_;
  std::string project_id_;
};

}  // namespace qeloop
