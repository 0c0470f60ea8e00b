#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qeloop/artefact.hpp"
#include "qeloop/rubric.hpp"
#include "qeloop/text.hpp"

namespace qeloop {

struct OpCounts {
  std::uint64_t forward = 0;
  std::uint64_t reverse = 0;
  std::uint64_t judge = 0;

  std::uint64_t total() const { return forward + reverse + judge; }
  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

// One op is one provider call. Counters only grow.
class GenerationStats {
 public:
  void add_forward() { ++forward_; }
  void add_reverse() { ++reverse_; }
  void add_judge() { ++judge_; }
  OpCounts snapshot() const { return {forward_.load(), reverse_.load(), judge_.load()}; }
  void restore(const OpCounts& c) {
    forward_ = c.forward;
    reverse_ = c.reverse;
    judge_ = c.judge;
  }

 private:
  std::atomic<std::uint64_t> forward_{0};
  std::atomic<std::uint64_t> reverse_{0};
  std::atomic<std::uint64_t> judge_{0};
};

enum class GenerationTask { Forward, Reverse, Judge };

struct GenerationRequest {
  GenerationTask task = GenerationTask::Forward;
  ArtefactKind target = ArtefactKind::TestCase;  // kind the output must parse as
  std::vector<Artefact> batch;
  std::string prompt;  // rendered template
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  virtual std::string id() const = 0;
  // One provider call; returns raw text in an artefact document format (or
  // "metric: score" lines for Judge).
  virtual std::string generate(const GenerationRequest& request) = 0;
};

/// Deterministic template-based stand-in for an LLM.
///
/// Forward: every sentence of a requirement becomes one test case
/// (TC-<req>-<n>, "Step: <condition>" / "Expect: <outcome>") or one scenario
/// under "Feature: REQ-<req>" ("Given <condition>" / "Then <outcome>"). The
/// condition clause starts at the first conditional marker ("if", "when",
/// "after", ...); a leading marker clause ends at the first comma.
/// Reverse: derived artefacts are grouped by requirement id and each pair is
/// rebuilt as "<outcome> <condition>.". Judge: heuristic rubric scores.
class MockGenerationProvider final : public GenerationProvider {
 public:
  explicit MockGenerationProvider(Lexicons lex = Lexicons::defaults()) : lex_(std::move(lex)) {}
  std::string id() const override { return "mock-v1"; }
  std::string generate(const GenerationRequest& request) override;

 private:
  Lexicons lex_;
};

inline constexpr std::string_view kNoCondition = "(no precondition)";
inline constexpr std::string_view kNoOutcome = "(no observable outcome)";

struct Clauses {
  std::string condition;  // may be empty
  std::string outcome;    // may be empty
};

// Splits one sentence (terminal punctuation dropped) into condition/outcome.
Clauses split_clauses(std::string_view sentence);

struct RemoteGenerationConfig {
  std::string url;
  std::string model;
  std::string api_key_env;
  int timeout_seconds = 60;
  int retries = 1;
};

// POST {"model", "prompt"} -> {"text"}.
class RemoteGenerationProvider final : public GenerationProvider {
 public:
  explicit RemoteGenerationProvider(RemoteGenerationConfig config) : config_(std::move(config)) {}
  std::string id() const override { return "remote:" + config_.model; }
  std::string generate(const GenerationRequest& request) override;

 private:
  RemoteGenerationConfig config_;
};

struct PromptTemplates {
  std::string forward;  // {artefacts} {target_kind} {format_instructions}
  std::string reverse;  // {artefacts} {target_kind} {format_instructions}
  std::string judge;    // {artefact_body} {metric_definitions}

  static const PromptTemplates& defaults();
  // Reads forward.txt / reverse.txt / judge.txt; missing files keep defaults.
  static PromptTemplates load(const std::filesystem::path& dir);
};

// Replaces every "{name}" whose name is a key of vars; other braces stay.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars);

// Format instructions given to the provider for a target kind.
std::string_view format_instructions(ArtefactKind kind);

struct GenerationOptions {
  std::size_t batch_size = 10;
  std::size_t concurrency = 1;
  PromptTemplates prompts = PromptTemplates::defaults();
};

/// Drives a provider in batches, validates output against the artefact
/// formats and counts ops. Results are ordered by input regardless of the
/// order in which concurrent batches complete.
class Generator {
 public:
  Generator(std::shared_ptr<GenerationProvider> provider, GenerationOptions options = {});

  // Throws EmptyCorpus, WrongKind, MalformedProviderOutput, ProviderUnavailable.
  Corpus forward(const Corpus& requirements, ArtefactKind target);
  Corpus reverse(const Corpus& derived, std::uint32_t cycle);
  ArtefactScores judge(const Artefact& artefact);

  GenerationStats& stats() { return stats_; }
  const GenerationOptions& options() const { return options_; }
  std::string provider_id() const { return provider_->id(); }

 private:
  std::vector<std::string> run_batches(GenerationTask task, ArtefactKind target,
                                       const std::vector<std::vector<Artefact>>& batches, const std::string& tpl);

  std::shared_ptr<GenerationProvider> provider_;
  GenerationOptions options_;
  GenerationStats stats_;
};

// Rubric backend that asks the generation provider to act as judge.
class LlmJudgeRubric final : public RubricBackend {
 public:
  explicit LlmJudgeRubric(std::shared_ptr<Generator> generator) : generator_(std::move(generator)) {}
  std::string id() const override { return "llm-judge:" + generator_->provider_id(); }
  ArtefactScores score(const Artefact& a) override { return generator_->judge(a); }

 private:
  std::shared_ptr<Generator> generator_;
};

struct DegradationSpec {
  double level = 0.0;  // d in [0, 1]
  bool ambiguity_injection = false;
};

// Token t (after the head token of its segment) is dropped iff
// fnv1a64(lower(t)) % 100 < 100 * d. With injection, one ambiguity phrase
// chosen by hash is appended to every degraded segment. d = 0 is the
// identity, with or without injection.
Corpus degrade(const Corpus& c, const DegradationSpec& spec, const Lexicons& lex = Lexicons::defaults());
std::string degrade_sentence(std::string_view sentence, const DegradationSpec& spec, const Lexicons& lex);

}  // namespace qeloop
