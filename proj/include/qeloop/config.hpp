#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "qeloop/embedding.hpp"
#include "qeloop/generation.hpp"
#include "qeloop/orchestrator.hpp"
#include "qeloop/reporting.hpp"

namespace qeloop {

inline constexpr std::string_view kConfigFileName = "qeloop.json";
inline constexpr std::string_view kServiceTokenEnv = "QELOOP_SERVICE_TOKEN";

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "http://localhost:5173";
  std::string bearer_token;  // empty: authentication off
};

/// Project configuration, read from qeloop.json. Relative paths resolve
/// against the directory holding the file. Every key is optional.
///
///   {
///     "workspace": "workspace",
///     "derived_kind": "testcase",
///     "thresholds": {"testcase": {"high": 0.8, "medium": 0.6, "low": 0.3}},
///     "generation": {"provider": "mock", "url": "", "model": "", "api_key_env": "",
///                    "timeout_seconds": 60, "retries": 1, "batch_size": 10,
///                    "concurrency": 1, "prompts_dir": ""},
///     "embedding": {"provider": "hash", "url": "", "model": "", "dim": 0,
///                   "api_key_env": "", "timeout_seconds": 30, "retries": 1, "batch_size": 64},
///     "rubric": {"backend": "heuristic"},
///     "lexicons": {"stopwords": "config/stopwords.txt", ...},
///     "convergence": {"rubric_delta": 0.1, "cosine_delta": 0.02, "max_cycles": 3},
///     "energy": {"energy_per_op_kwh": 0.1, "grid_factor_tons_per_kwh": 0.0004, "baseline_ops": null},
///     "service": {"host": "127.0.0.1", "port": 8080, "cors_origin": "...", "bearer_token": ""},
///     "fixed_clock": null
///   }
///
/// The bearer token may instead come from QELOOP_SERVICE_TOKEN, which wins.
struct ProjectConfig {
  std::filesystem::path base_dir = ".";
  std::filesystem::path workspace = "workspace";
  ArtefactKind derived_kind = ArtefactKind::TestCase;
  std::map<ArtefactKind, Thresholds> thresholds;

  std::string generation_provider = "mock";  // mock | remote
  RemoteGenerationConfig remote_generation;
  std::size_t batch_size = 10;
  std::size_t concurrency = 1;
  std::filesystem::path prompts_dir;

  std::string embedding_provider = "hash";  // hash | remote
  RemoteEmbeddingConfig remote_embedding;
  std::size_t embedding_batch_size = 64;

  std::string rubric_backend = "heuristic";  // heuristic | llm-judge
  std::map<std::string, std::filesystem::path> lexicons;  // keys as Lexicons members
  ConvergenceConfig convergence;
  EnergyLedger energy;  // llm_ops unused here
  ServiceConfig service;
  std::optional<std::string> fixed_clock;

  // Relative paths resolved against base_dir.
  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path project_dir(std::string_view project) const { return resolve(workspace) / project; }
};

// Throws InvalidConfig on unknown enum values, bad thresholds, negative
// rates or non-positive sizes.
ProjectConfig parse_config(const nlohmann::json& j, std::filesystem::path base_dir = ".");
// A missing file yields the defaults with base_dir set to its directory.
ProjectConfig load_config(const std::filesystem::path& file);
nlohmann::json config_to_json(const ProjectConfig& cfg);
void validate(const ProjectConfig& cfg);

// Built-in defaults, with each configured list replaced by its file.
Lexicons load_lexicons(const ProjectConfig& cfg);

Clock make_clock(const ProjectConfig& cfg);

// Providers and backends as configured. `provider` overrides the configured
// generation provider; the embedding cache is file-backed under project_dir
// when given.
PipelineContext build_context(const ProjectConfig& cfg, const std::optional<std::filesystem::path>& project_dir = {},
                              const std::optional<std::string>& provider = {});

}  // namespace qeloop
