#include "qeloop/generation.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "http_client.hpp"
#include "qeloop/embedding.hpp"
#include "qeloop/error.hpp"
#include "qeloop/strings.hpp"

namespace qeloop {

namespace {

const WordSet& conditional_markers() {
  static const WordSet kMarkers = {"if",     "when",   "after",    "once",  "upon",
                                   "unless", "before", "whenever", "while", "until"};
  return kMarkers;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && str::is_space(s[i])) ++i;
    const auto b = i;
    while (i < s.size() && !str::is_space(s[i])) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

std::string bare_lower(std::string_view word) {
  std::string out;
  for (char c : word)
    if (str::is_word_byte(c)) out += str::to_lower(c);
  return out;
}

bool is_placeholder(std::string_view s) { return s == kNoCondition || s == kNoOutcome; }

std::string mock_forward(const GenerationRequest& req) {
  std::string out;
  for (const auto& r : req.batch) {
    const auto sentences = split_segments(r.body);
    if (req.target == ArtefactKind::BddScenario) {
      out += "Feature: REQ-" + r.id + "\n";
      for (std::size_t n = 1; n <= sentences.size(); ++n) {
        const auto cl = split_clauses(sentences[n - 1]);
        out += "\n  Scenario: " + r.id + " case " + std::to_string(n) + "\n";
        out += "    Given " + (cl.condition.empty() ? std::string(kNoCondition) : cl.condition) + "\n";
        out += "    Then " + (cl.outcome.empty() ? std::string(kNoOutcome) : cl.outcome) + "\n";
      }
      out += "\n";
    } else {
      for (std::size_t n = 1; n <= sentences.size(); ++n) {
        const auto cl = split_clauses(sentences[n - 1]);
        out += "TC-" + r.id + "-" + std::to_string(n) + ": " + r.id + " check " + std::to_string(n) + "\n";
        out += "Step: " + (cl.condition.empty() ? std::string(kNoCondition) : cl.condition) + "\n";
        out += "Expect: " + (cl.outcome.empty() ? std::string(kNoOutcome) : cl.outcome) + "\n\n";
      }
    }
  }
  return out;
}

// Condition and outcome lines of one derived artefact.
Clauses derived_clauses(const Artefact& a) {
  std::vector<std::string> conds, outcomes;
  bool outcome_mode = false;
  for (auto line : str::lines(a.body)) {
    auto t = str::trim(line);
    if (t.empty() || t.front() == '|' || t == "Examples:") continue;
    std::string_view rest = t;
    auto take = [&](std::string_view kw) {
      if (!t.starts_with(kw)) return false;
      rest = str::trim(t.substr(kw.size()));
      return true;
    };
    if (take("Step:") || take("Given ") || take("When ")) {
      outcome_mode = false;
    } else if (take("Expect:") || take("Then ")) {
      outcome_mode = true;
    } else {
      take("And ") || take("But ") || take("* ");
    }
    if (rest.empty() || is_placeholder(rest)) continue;
    (outcome_mode ? outcomes : conds).emplace_back(rest);
  }
  return {str::join(conds, " "), str::join(outcomes, " ")};
}

std::string mock_reverse(const GenerationRequest& req) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::string>> sentences;
  for (const auto& a : req.batch) {
    const auto rid = trace_requirement_id(a);
    if (!sentences.contains(rid)) order.push_back(rid);
    auto& list = sentences[rid];
    const auto cl = derived_clauses(a);
    std::string s = cl.outcome;
    if (!cl.condition.empty()) s += (s.empty() ? "" : " ") + cl.condition;
    s = std::string(str::trim(s));
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
    if (!s.empty()) list.push_back(s + ".");
  }
  std::string out;
  for (const auto& rid : order) {
    auto body = str::join(sentences[rid], " ");
    if (body.empty()) body = std::string(kNoOutcome) + ".";
    out += "REQ-" + rid + ": " + body + "\n\n";
  }
  return out;
}

}  // namespace

Clauses split_clauses(std::string_view sentence) {
  auto s = str::trim(sentence);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s = str::trim(s.substr(0, s.size() - 1));
  const auto words = split_ws(s);
  std::size_t k = 0;
  while (k < words.size() && !conditional_markers().contains(bare_lower(words[k]))) ++k;
  if (k == words.size()) return {"", str::join(words, " ")};
  if (k == 0) {
    const auto comma = s.find(',');
    if (comma == std::string_view::npos) return {str::join(words, " "), ""};
    return {str::collapse_ws(s.substr(0, comma)), str::collapse_ws(s.substr(comma + 1))};
  }
  const std::vector<std::string_view> head(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(k));
  const std::vector<std::string_view> tail(words.begin() + static_cast<std::ptrdiff_t>(k), words.end());
  return {str::join(tail, " "), str::join(head, " ")};
}

std::string MockGenerationProvider::generate(const GenerationRequest& request) {
  switch (request.task) {
    case GenerationTask::Forward: return mock_forward(request);
    case GenerationTask::Reverse: return mock_reverse(request);
    case GenerationTask::Judge: {
      if (request.batch.empty()) return {};
      Artefact a = request.batch.front();
      a.kind = ArtefactKind::Requirement;
      const auto s = HeuristicRubric(lex_).score(a);
      return "clarity: " + std::to_string(s.clarity) + "\ncompleteness: " + std::to_string(s.completeness) +
             "\ntestability: " + std::to_string(s.testability) + "\n";
    }
  }
  return {};
}

std::string RemoteGenerationProvider::generate(const GenerationRequest& request) {
  const nlohmann::json body = {{"model", config_.model}, {"prompt", request.prompt}};
  const auto res = detail::post_json({config_.url, config_.api_key_env, config_.timeout_seconds, config_.retries},
                                     body, id());
  if (!res.contains("text") || !res["text"].is_string())
    throw Error(Errc::ProviderUnavailable, id(), "response has no \"text\" string");
  return res["text"].get<std::string>();
}

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates t{
      "You are a quality engineer. Write {target_kind} artefacts for the requirements below.\n"
      "{format_instructions}\n\nRequirements:\n{artefacts}\n",
      "You are a quality engineer. Reconstruct the requirements that the artefacts below were written for.\n"
      "{format_instructions}\n\nArtefacts:\n{artefacts}\n",
      "Rate the requirement below.\n{metric_definitions}\n\n"
      "Answer with exactly three lines: \"clarity: N\", \"completeness: N\", \"testability: N\".\n\n"
      "Requirement:\n{artefact_body}\n",
  };
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t = defaults();
  auto read = [&](const char* name, std::string& into) {
    std::ifstream in(dir / name);
    if (!in) return;
    std::stringstream ss;
    ss << in.rdbuf();
    into = ss.str();
  };
  read("forward.txt", t.forward);
  read("reverse.txt", t.reverse);
  read("judge.txt", t.judge);
  return t;
}

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      const auto close = tpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto it = vars.find(std::string(tpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tpl[i++];
  }
  return out;
}

std::string_view format_instructions(ArtefactKind kind) {
  switch (kind) {
    case ArtefactKind::Requirement:
      return "Output one block per requirement: a line \"REQ-<id>: <text>\" using the requirement id the "
             "artefacts trace to, followed by a blank line.";
    case ArtefactKind::TestCase:
      return "Output one block per test case: \"TC-<requirement id>-<n>: <title>\", then one or more "
             "\"Step: <action>\" lines and one or more \"Expect: <outcome>\" lines, then a blank line.";
    case ArtefactKind::BddScenario:
      return "Output Gherkin: one \"Feature: REQ-<requirement id>\" per requirement, each with one or more "
             "\"Scenario:\" blocks of Given/When/Then steps.";
  }
  return {};
}

Generator::Generator(std::shared_ptr<GenerationProvider> provider, GenerationOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {
  if (options_.batch_size == 0) options_.batch_size = 1;
  if (options_.concurrency == 0) options_.concurrency = 1;
}

std::vector<std::string> Generator::run_batches(GenerationTask task, ArtefactKind target,
                                                const std::vector<std::vector<Artefact>>& batches,
                                                const std::string& tpl) {
  std::vector<GenerationRequest> requests;
  requests.reserve(batches.size());
  for (const auto& b : batches) {
    Corpus view{"", b.front().kind, b};
    requests.push_back({task, target, b,
                        render_template(tpl, {{"artefacts", serialize_document(view)},
                                              {"target_kind", std::string(to_string(target))},
                                              {"format_instructions", std::string(format_instructions(target))}})});
  }

  auto call = [this, task](const GenerationRequest& r) {
    if (task == GenerationTask::Forward) stats_.add_forward();
    if (task == GenerationTask::Reverse) stats_.add_reverse();
    if (task == GenerationTask::Judge) stats_.add_judge();
    return provider_->generate(r);
  };

  std::vector<std::string> out(requests.size());
  if (options_.concurrency <= 1 || requests.size() <= 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) out[i] = call(requests[i]);
    return out;
  }
  for (std::size_t wave = 0; wave < requests.size(); wave += options_.concurrency) {
    const auto end = std::min(requests.size(), wave + options_.concurrency);
    std::vector<std::future<std::string>> futures;
    for (auto i = wave; i < end; ++i)
      futures.push_back(std::async(std::launch::async, call, std::cref(requests[i])));
    // get() in input order so the first failing batch is the one reported.
    for (auto i = wave; i < end; ++i) out[i] = futures[i - wave].get();
  }
  return out;
}

namespace {

[[noreturn]] void malformed(const std::string& provider, const std::string& why, const std::string& raw) {
  throw Error(Errc::MalformedProviderOutput, provider, why + "\n--- raw output ---\n" + raw);
}

Corpus parse_output(ArtefactKind kind, const std::string& text, const std::string& provider) {
  try {
    return parse_document(kind, text);
  } catch (const Error& e) {
    malformed(provider, e.what(), text);
  }
}

}  // namespace

Corpus Generator::forward(const Corpus& requirements, ArtefactKind target) {
  if (requirements.empty()) throw Error(Errc::EmptyCorpus, requirements.project_id, "nothing to generate from");
  if (requirements.kind != ArtefactKind::Requirement)
    throw Error(Errc::WrongKind, requirements.project_id, "forward generation needs requirements");
  if (target == ArtefactKind::Requirement)
    throw Error(Errc::WrongKind, requirements.project_id, "forward target must be TestCase or BddScenario");

  std::vector<std::vector<Artefact>> batches;
  for (std::size_t i = 0; i < requirements.size(); i += options_.batch_size) {
    const auto end = std::min(requirements.size(), i + options_.batch_size);
    batches.emplace_back(requirements.artefacts.begin() + static_cast<std::ptrdiff_t>(i),
                         requirements.artefacts.begin() + static_cast<std::ptrdiff_t>(end));
  }
  const auto texts = run_batches(GenerationTask::Forward, target, batches, options_.prompts.forward);

  Corpus out{requirements.project_id, target, {}};
  std::set<std::string> seen;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    auto parsed = parse_output(target, texts[b], provider_->id());
    std::set<std::string> wanted, covered;
    for (const auto& r : batches[b]) wanted.insert(r.id);
    for (auto& a : parsed.artefacts) {
      const auto rid = trace_requirement_id(a);
      if (!wanted.contains(rid)) malformed(provider_->id(), "artefact " + a.id + " traces to unknown requirement " + rid, texts[b]);
      if (!seen.insert(a.id).second) malformed(provider_->id(), "duplicate artefact id " + a.id, texts[b]);
      covered.insert(rid);
      out.artefacts.push_back(std::move(a));
    }
    for (const auto& id : wanted)
      if (!covered.contains(id)) malformed(provider_->id(), "no artefact generated for requirement " + id, texts[b]);
  }
  return out;
}

Corpus Generator::reverse(const Corpus& derived, std::uint32_t cycle) {
  if (derived.empty()) throw Error(Errc::EmptyCorpus, derived.project_id, "nothing to reverse-generate from");
  if (derived.kind == ArtefactKind::Requirement)
    throw Error(Errc::WrongKind, derived.project_id, "reverse generation needs test cases or scenarios");

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Artefact>> groups;
  for (const auto& a : derived.artefacts) {
    const auto rid = trace_requirement_id(a);
    if (!groups.contains(rid)) order.push_back(rid);
    groups[rid].push_back(a);
  }

  // Groups never straddle batches, so each requirement comes from one call.
  std::vector<std::vector<Artefact>> batches;
  std::vector<std::vector<std::string>> batch_ids;
  for (const auto& rid : order) {
    const auto& g = groups[rid];
    if (batches.empty() || batches.back().size() + g.size() > options_.batch_size) {
      batches.emplace_back();
      batch_ids.emplace_back();
    }
    batches.back().insert(batches.back().end(), g.begin(), g.end());
    batch_ids.back().push_back(rid);
  }
  const auto texts = run_batches(GenerationTask::Reverse, ArtefactKind::Requirement, batches, options_.prompts.reverse);

  Corpus out{derived.project_id, ArtefactKind::Requirement, {}};
  for (std::size_t b = 0; b < batches.size(); ++b) {
    auto parsed = parse_output(ArtefactKind::Requirement, texts[b], provider_->id());
    for (const auto& rid : batch_ids[b]) {
      const auto* a = parsed.find(rid);
      if (!a) malformed(provider_->id(), "no requirement reconstructed for " + rid, texts[b]);
      Artefact r = *a;
      r.origin = Origin::ReverseGenerated;
      r.source_cycle = cycle;
      out.artefacts.push_back(std::move(r));
    }
    if (parsed.size() != batch_ids[b].size())
      malformed(provider_->id(), "unexpected extra requirements in output", texts[b]);
  }
  return out;
}

ArtefactScores Generator::judge(const Artefact& artefact) {
  const auto prompt = render_template(options_.prompts.judge, {{"artefact_body", artefact.body},
                                                               {"metric_definitions", std::string(rubric_metric_definitions())}});
  stats_.add_judge();
  const auto text = provider_->generate({GenerationTask::Judge, ArtefactKind::Requirement, {artefact}, prompt});
  const auto scores = parse_judge_scores(text);
  if (!scores) malformed(provider_->id(), "judge output lacks clarity/completeness/testability scores", text);
  return *scores;
}

std::string degrade_sentence(std::string_view sentence, const DegradationSpec& spec, const Lexicons& lex) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : sentence) {
    if (str::is_word_byte(c)) {
      cur += c;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty()) return std::string(sentence);

  std::vector<std::string> kept{tokens.front()};
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto h = fnv1a64(str::lower(tokens[i]));
    if (static_cast<double>(h % 100) >= 100.0 * spec.level) kept.push_back(tokens[i]);
  }
  std::string out = str::join(kept, " ");
  if (spec.ambiguity_injection && !lex.ambiguity.empty()) {
    auto it = lex.ambiguity.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(fnv1a64(sentence) % lex.ambiguity.size()));
    std::string phrase = *it;
    while (!phrase.empty() && phrase.back() == '.') phrase.pop_back();
    out += " " + phrase;
  }
  return out + ".";
}

Corpus degrade(const Corpus& c, const DegradationSpec& spec, const Lexicons& lex) {
  if (spec.level <= 0.0) return c;
  Corpus out = c;
  for (auto& a : out.artefacts) {
    std::vector<std::string> parts;
    if (a.kind == ArtefactKind::Requirement) {
      for (const auto& s : split_segments(a.body)) parts.push_back(degrade_sentence(s, spec, lex));
      a.body = str::join(parts, " ");
    } else {
      // Keep line structure and leading labels so the result still parses.
      for (auto line : str::lines(a.body)) {
        const auto t = str::trim(line);
        if (t.empty()) continue;
        if (t.front() == '|' || t == "Examples:") {
          parts.emplace_back(t);
          continue;
        }
        std::string_view label;
        for (std::string_view kw : {"Step: ", "Expect: ", "Given ", "When ", "Then ", "And ", "But ", "* "})
          if (t.starts_with(kw)) label = kw;
        const auto rest = t.substr(label.size());
        parts.push_back(std::string(label) + (str::has_word_byte(rest) ? degrade_sentence(rest, spec, lex) : std::string(rest)));
      }
      a.body = str::join(parts, "\n");
    }
    a.origin = Origin::Degraded;
  }
  return out;
}

}  // namespace qeloop
