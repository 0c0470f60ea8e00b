#include "qeloop/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qeloop/error.hpp"
#include "qeloop/serialization.hpp"

namespace qeloop {

using nlohmann::json;

std::filesystem::path ProjectConfig::resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) { throw Error(Errc::InvalidConfig, key, why); }

const char* const kLexiconKeys[] = {"stopwords", "verbs", "ambiguity", "actors", "outcomes", "negations", "units"};

WordSet* lexicon_member(Lexicons& lex, std::string_view key) {
  if (key == "stopwords") return &lex.stopwords;
  if (key == "verbs") return &lex.verbs;
  if (key == "ambiguity") return &lex.ambiguity;
  if (key == "actors") return &lex.actors;
  if (key == "outcomes") return &lex.outcomes;
  if (key == "negations") return &lex.negations;
  if (key == "units") return &lex.units;
  return nullptr;
}

template <class T>
void read(const json& obj, const char* key, T& into) {
  if (obj.contains(key) && !obj.at(key).is_null()) into = obj.at(key).get<T>();
}

}  // namespace

void validate(const ProjectConfig& cfg) {
  for (const auto& [kind, t] : cfg.thresholds)
    if (!t.valid()) bad("thresholds." + std::string(to_string(kind)), "require 0 < low < medium < high < 1");
  if (cfg.generation_provider != "mock" && cfg.generation_provider != "remote")
    bad("generation.provider", "expected mock or remote");
  if (cfg.embedding_provider != "hash" && cfg.embedding_provider != "remote")
    bad("embedding.provider", "expected hash or remote");
  if (cfg.rubric_backend != "heuristic" && cfg.rubric_backend != "llm-judge")
    bad("rubric.backend", "expected heuristic or llm-judge");
  if (cfg.batch_size == 0) bad("generation.batch_size", "must be positive");
  if (cfg.concurrency == 0) bad("generation.concurrency", "must be positive");
  if (cfg.embedding_batch_size == 0) bad("embedding.batch_size", "must be positive");
  if (cfg.derived_kind == ArtefactKind::Requirement) bad("derived_kind", "must be testcase or bdd");
  if (cfg.convergence.max_cycles == 0) bad("convergence.max_cycles", "must be positive");
  if (!(cfg.convergence.rubric_delta >= 0.0) || !(cfg.convergence.cosine_delta >= 0.0))
    bad("convergence", "deltas must be non-negative");
  if (!(cfg.energy.energy_per_op_kwh >= 0.0) || !(cfg.energy.grid_factor_tons_per_kwh >= 0.0))
    bad("energy", "rates must be non-negative");
  if (cfg.energy.baseline_ops && *cfg.energy.baseline_ops < 0) bad("energy.baseline_ops", "must be non-negative");
  if (cfg.service.port <= 0 || cfg.service.port > 65535) bad("service.port", "out of range");
  if (cfg.generation_provider == "remote" && cfg.remote_generation.url.empty())
    bad("generation.url", "required for the remote provider");
  if (cfg.embedding_provider == "remote" && (cfg.remote_embedding.url.empty() || cfg.remote_embedding.dim == 0))
    bad("embedding", "url and dim are required for the remote provider");
  for (const auto& [key, path] : cfg.lexicons)
    if (std::find(std::begin(kLexiconKeys), std::end(kLexiconKeys), key) == std::end(kLexiconKeys))
      bad("lexicons." + key, "unknown list");
}

ProjectConfig parse_config(const json& j, std::filesystem::path base_dir) {
  ProjectConfig cfg;
  cfg.base_dir = std::move(base_dir);
  try {
    if (!j.is_object()) bad("<root>", "expected an object");
    if (j.contains("workspace")) cfg.workspace = j.at("workspace").get<std::string>();
    if (j.contains("derived_kind")) {
      const auto k = parse_kind(j.at("derived_kind").get<std::string>());
      if (!k) bad("derived_kind", "unknown kind");
      cfg.derived_kind = *k;
    }
    if (j.contains("thresholds")) {
      for (const auto& [name, t] : j.at("thresholds").items()) {
        const auto k = parse_kind(name);
        if (!k) bad("thresholds." + name, "unknown kind");
        cfg.thresholds[*k] = t.get<Thresholds>();
      }
    }
    if (j.contains("generation")) {
      const auto& g = j.at("generation");
      read(g, "provider", cfg.generation_provider);
      read(g, "url", cfg.remote_generation.url);
      read(g, "model", cfg.remote_generation.model);
      read(g, "api_key_env", cfg.remote_generation.api_key_env);
      read(g, "timeout_seconds", cfg.remote_generation.timeout_seconds);
      read(g, "retries", cfg.remote_generation.retries);
      read(g, "batch_size", cfg.batch_size);
      read(g, "concurrency", cfg.concurrency);
      std::string prompts;
      read(g, "prompts_dir", prompts);
      cfg.prompts_dir = prompts;
    }
    if (j.contains("embedding")) {
      const auto& e = j.at("embedding");
      read(e, "provider", cfg.embedding_provider);
      read(e, "url", cfg.remote_embedding.url);
      read(e, "model", cfg.remote_embedding.model);
      read(e, "dim", cfg.remote_embedding.dim);
      read(e, "provider_id", cfg.remote_embedding.provider_id);
      read(e, "api_key_env", cfg.remote_embedding.api_key_env);
      read(e, "timeout_seconds", cfg.remote_embedding.timeout_seconds);
      read(e, "retries", cfg.remote_embedding.retries);
      read(e, "batch_size", cfg.embedding_batch_size);
    }
    if (j.contains("rubric")) read(j.at("rubric"), "backend", cfg.rubric_backend);
    if (j.contains("lexicons"))
      for (const auto& [name, path] : j.at("lexicons").items()) cfg.lexicons[name] = path.get<std::string>();
    if (j.contains("convergence")) {
      const auto& c = j.at("convergence");
      read(c, "rubric_delta", cfg.convergence.rubric_delta);
      read(c, "cosine_delta", cfg.convergence.cosine_delta);
      read(c, "max_cycles", cfg.convergence.max_cycles);
    }
    if (j.contains("energy")) {
      const auto& e = j.at("energy");
      read(e, "energy_per_op_kwh", cfg.energy.energy_per_op_kwh);
      read(e, "grid_factor_tons_per_kwh", cfg.energy.grid_factor_tons_per_kwh);
      if (e.contains("baseline_ops") && !e.at("baseline_ops").is_null())
        cfg.energy.baseline_ops = e.at("baseline_ops").get<std::int64_t>();
    }
    if (j.contains("service")) {
      const auto& s = j.at("service");
      read(s, "host", cfg.service.host);
      read(s, "port", cfg.service.port);
      read(s, "cors_origin", cfg.service.cors_origin);
      read(s, "bearer_token", cfg.service.bearer_token);
    }
    if (j.contains("fixed_clock") && !j.at("fixed_clock").is_null())
      cfg.fixed_clock = j.at("fixed_clock").get<std::string>();
  } catch (const json::exception& e) {
    bad("<json>", e.what());
  }
  if (const char* token = std::getenv(std::string(kServiceTokenEnv).c_str()); token && *token)
    cfg.service.bearer_token = token;
  validate(cfg);
  return cfg;
}

ProjectConfig load_config(const std::filesystem::path& file) {
  const auto base = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  std::ifstream in(file);
  if (!in) return parse_config(json::object(), base);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    bad(file.string(), e.what());
  }
  return parse_config(j, base);
}

json config_to_json(const ProjectConfig& cfg) {
  json thresholds = json::object();
  for (const auto& [kind, t] : cfg.thresholds) thresholds[std::string(to_string(kind))] = t;
  json lexicons = json::object();
  for (const auto& [name, path] : cfg.lexicons) lexicons[name] = path.string();
  return {{"workspace", cfg.workspace.string()},
          {"derived_kind", to_string(cfg.derived_kind)},
          {"thresholds", thresholds},
          {"generation",
           {{"provider", cfg.generation_provider},
            {"url", cfg.remote_generation.url},
            {"model", cfg.remote_generation.model},
            {"api_key_env", cfg.remote_generation.api_key_env},
            {"timeout_seconds", cfg.remote_generation.timeout_seconds},
            {"retries", cfg.remote_generation.retries},
            {"batch_size", cfg.batch_size},
            {"concurrency", cfg.concurrency},
            {"prompts_dir", cfg.prompts_dir.string()}}},
          {"embedding",
           {{"provider", cfg.embedding_provider},
            {"url", cfg.remote_embedding.url},
            {"model", cfg.remote_embedding.model},
            {"dim", cfg.remote_embedding.dim},
            {"provider_id", cfg.remote_embedding.provider_id},
            {"api_key_env", cfg.remote_embedding.api_key_env},
            {"timeout_seconds", cfg.remote_embedding.timeout_seconds},
            {"retries", cfg.remote_embedding.retries},
            {"batch_size", cfg.embedding_batch_size}}},
          {"rubric", {{"backend", cfg.rubric_backend}}},
          {"lexicons", lexicons},
          {"convergence",
           {{"rubric_delta", cfg.convergence.rubric_delta},
            {"cosine_delta", cfg.convergence.cosine_delta},
            {"max_cycles", cfg.convergence.max_cycles}}},
          {"energy",
           {{"energy_per_op_kwh", cfg.energy.energy_per_op_kwh},
            {"grid_factor_tons_per_kwh", cfg.energy.grid_factor_tons_per_kwh},
            {"baseline_ops", cfg.energy.baseline_ops ? json(*cfg.energy.baseline_ops) : json(nullptr)}}},
          {"service",
           {{"host", cfg.service.host},
            {"port", cfg.service.port},
            {"cors_origin", cfg.service.cors_origin},
            {"bearer_token", cfg.service.bearer_token}}},
          {"fixed_clock", cfg.fixed_clock ? json(*cfg.fixed_clock) : json(nullptr)}};
}

Lexicons load_lexicons(const ProjectConfig& cfg) {
  Lexicons lex = Lexicons::defaults();
  for (const auto& key : kLexiconKeys) {
    const auto it = cfg.lexicons.find(key);
    if (it != cfg.lexicons.end()) *lexicon_member(lex, key) = load_word_list(cfg.resolve(it->second));
  }
  return lex;
}

Clock make_clock(const ProjectConfig& cfg) { return cfg.fixed_clock ? fixed_clock(*cfg.fixed_clock) : system_clock(); }

PipelineContext build_context(const ProjectConfig& cfg, const std::optional<std::filesystem::path>& project_dir,
                              const std::optional<std::string>& provider) {
  PipelineContext ctx;
  ctx.lex = load_lexicons(cfg);
  ctx.thresholds = cfg.thresholds;
  ctx.convergence = cfg.convergence;
  ctx.derived_kind = cfg.derived_kind;
  ctx.clock = make_clock(cfg);

  const auto gen_provider = provider.value_or(cfg.generation_provider);
  std::shared_ptr<GenerationProvider> gp;
  if (gen_provider == "mock") {
    gp = std::make_shared<MockGenerationProvider>(ctx.lex);
  } else if (gen_provider == "remote") {
    if (cfg.remote_generation.url.empty()) bad("generation.url", "required for the remote provider");
    gp = std::make_shared<RemoteGenerationProvider>(cfg.remote_generation);
  } else {
    bad("provider", "expected mock or remote, got " + gen_provider);
  }
  GenerationOptions opts;
  opts.batch_size = cfg.batch_size;
  opts.concurrency = cfg.concurrency;
  if (!cfg.prompts_dir.empty()) opts.prompts = PromptTemplates::load(cfg.resolve(cfg.prompts_dir));
  ctx.generator = std::make_shared<Generator>(std::move(gp), std::move(opts));

  std::shared_ptr<EmbeddingProvider> ep;
  if (cfg.embedding_provider == "remote")
    ep = std::make_shared<RemoteEmbeddingProvider>(cfg.remote_embedding);
  else
    ep = std::make_shared<HashEmbeddingProvider>(ctx.lex.stopwords);
  auto cache = project_dir ? std::make_shared<EmbeddingCache>(*project_dir / "embeddings.jsonl", ctx.clock)
                           : std::make_shared<EmbeddingCache>();
  ctx.embedder = std::make_shared<Embedder>(std::move(ep), std::move(cache), cfg.embedding_batch_size);

  if (cfg.rubric_backend == "llm-judge")
    ctx.rubric = std::make_shared<LlmJudgeRubric>(ctx.generator);
  else
    ctx.rubric = std::make_shared<HeuristicRubric>(ctx.lex);
  return ctx;
}

}  // namespace qeloop
