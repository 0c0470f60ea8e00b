#include "qeloop/artefact.hpp"

#include <set>

#include "qeloop/error.hpp"
#include "qeloop/strings.hpp"

namespace qeloop {

std::string_view to_string(ArtefactKind kind) {
  switch (kind) {
    case ArtefactKind::Requirement: return "Requirement";
    case ArtefactKind::TestCase: return "TestCase";
    case ArtefactKind::BddScenario: return "BddScenario";
  }
  return "Requirement";
}

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::Original: return "Original";
    case Origin::ReverseGenerated: return "ReverseGenerated";
    case Origin::Unified: return "Unified";
    case Origin::Degraded: return "Degraded";
  }
  return "Original";
}

std::optional<ArtefactKind> parse_kind(std::string_view name) {
  const auto n = str::lower(name);
  if (n == "requirement" || n == "requirements") return ArtefactKind::Requirement;
  if (n == "testcase" || n == "testcases" || n == "test-case") return ArtefactKind::TestCase;
  if (n == "bdd" || n == "bddscenario" || n == "gherkin") return ArtefactKind::BddScenario;
  return std::nullopt;
}

std::optional<Origin> parse_origin(std::string_view name) {
  for (auto o : {Origin::Original, Origin::ReverseGenerated, Origin::Unified, Origin::Degraded})
    if (to_string(o) == name) return o;
  return std::nullopt;
}

const Artefact* Corpus::find(std::string_view id) const {
  for (const auto& a : artefacts)
    if (a.id == id) return &a;
  return nullptr;
}

void validate(const Corpus& corpus) {
  std::set<std::string_view> seen;
  for (const auto& a : corpus.artefacts) {
    if (a.id.empty()) throw Error(Errc::InvalidConfig, "", "artefact with empty id");
    if (a.kind != corpus.kind)
      throw Error(Errc::WrongKind, a.id, "artefact kind differs from corpus kind");
    if (str::trim(a.body).empty()) throw Error(Errc::EmptyBody, a.id);
    if (!seen.insert(a.id).second) throw Error(Errc::DuplicateId, a.id);
  }
}

namespace {

bool valid_id_char(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '-' ||
         c == '_' || c == '.';
}

// Matches "<prefix><id>:<rest>" at column 0. Returns the id and the rest.
std::optional<std::pair<std::string, std::string>> match_header(std::string_view line,
                                                                std::string_view prefix) {
  if (!line.starts_with(prefix)) return std::nullopt;
  const auto colon = line.find(':', prefix.size());
  if (colon == std::string_view::npos || colon == prefix.size()) return std::nullopt;
  const auto id = line.substr(prefix.size(), colon - prefix.size());
  for (char c : id)
    if (!valid_id_char(c)) return std::nullopt;
  return std::pair{std::string(id), std::string(str::trim(line.substr(colon + 1)))};
}

class IdRegistry {
 public:
  void add(const std::string& id) {
    if (!ids_.insert(id).second) throw Error(Errc::DuplicateId, id);
  }

 private:
  std::set<std::string> ids_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Requirements

Corpus parse_requirements(std::string_view text, std::string project_id) {
  Corpus corpus{std::move(project_id), ArtefactKind::Requirement, {}};
  IdRegistry ids;

  std::optional<std::string> current_id;
  std::vector<std::string> body;

  auto flush = [&] {
    if (!current_id) return;
    if (body.empty()) throw Error(Errc::EmptyBody, *current_id);
    ids.add(*current_id);
    Artefact a;
    a.id = *current_id;
    a.kind = ArtefactKind::Requirement;
    a.body = str::join(body, "\n");
    corpus.artefacts.push_back(std::move(a));
    current_id.reset();
    body.clear();
  };

  for (auto line : str::lines(text)) {
    const auto t = str::trim(line);
    if (auto header = match_header(line, "REQ-")) {
      flush();
      current_id = header->first;
      if (!header->second.empty()) body.push_back(header->second);
      continue;
    }
    if (t.empty()) {
      flush();
      continue;
    }
    if (t.front() == '#') continue;
    // Prose outside a requirement block (document titles, notes) is ignored.
    if (current_id) body.emplace_back(t);
  }
  flush();

  if (corpus.artefacts.empty()) throw Error(Errc::NoArtefactsFound, "");
  return corpus;
}

std::string serialize_requirements(const Corpus& corpus) {
  std::string out;
  bool first = true;
  for (const auto& a : corpus.artefacts) {
    if (!first) out += "\n";
    first = false;
    const auto body_lines = str::lines(a.body);
    out += "REQ-" + a.id + ":";
    bool head = true;
    for (auto l : body_lines) {
      const auto t = str::trim(l);
      if (t.empty()) continue;
      if (head) {
        out += " ";
        out += t;
        out += "\n";
        head = false;
      } else {
        out += "  ";
        out += t;
        out += "\n";
      }
    }
    if (head) out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gherkin subset

std::string slugify(std::string_view name) {
  std::string out;
  bool dash = false;
  for (char c : name) {
    if (valid_id_char(c) && c != '-') {
      if (dash && !out.empty()) out += '-';
      dash = false;
      out += c;
    } else {
      dash = true;
    }
  }
  return out;
}

namespace {

bool starts_with_word(std::string_view line, std::string_view word) {
  return line.starts_with(word) && (line.size() == word.size() || line[word.size()] == ' ' ||
                                    line[word.size()] == '\t');
}

bool is_step_line(std::string_view t) {
  for (std::string_view kw : {"Given", "When", "Then", "And", "But", "*"})
    if (starts_with_word(t, kw)) return true;
  return false;
}

std::optional<std::string_view> keyword_rest(std::string_view t, std::string_view keyword) {
  if (!t.starts_with(keyword)) return std::nullopt;
  return str::trim(t.substr(keyword.size()));
}

struct ScenarioDraft {
  std::string title;
  std::vector<std::string> steps;
  std::size_t examples_line = 0;  // header seen, no row yet
};

}  // namespace

Corpus parse_gherkin(std::string_view text, std::string project_id) {
  Corpus corpus{std::move(project_id), ArtefactKind::BddScenario, {}};
  IdRegistry ids;

  std::string slug = "feature";
  std::size_t index = 0;
  bool in_background = false;
  std::optional<ScenarioDraft> current;
  std::vector<std::string> pending_tags;

  auto close = [&] {
    if (!current) return;
    const auto id = slug + "/" + std::to_string(index);
    if (current->examples_line != 0)
      throw Error(Errc::UnterminatedExamplesTable, std::to_string(current->examples_line),
                  "Examples header without table rows");
    if (current->steps.empty()) throw Error(Errc::EmptyBody, id);
    ids.add(id);
    Artefact a;
    a.id = id;
    a.kind = ArtefactKind::BddScenario;
    a.title = current->title;
    a.body = str::join(current->steps, "\n");
    corpus.artefacts.push_back(std::move(a));
    current.reset();
  };

  std::size_t lineno = 0;
  for (auto line : str::lines(text)) {
    ++lineno;
    const auto t = str::trim(line);
    if (t.empty() || t.front() == '#') continue;

    if (t.front() == '@') {
      std::string tag;
      for (char c : t) {
        if (str::is_space(c)) {
          if (!tag.empty()) pending_tags.push_back(tag);
          tag.clear();
        } else {
          tag += c;
        }
      }
      if (!tag.empty()) pending_tags.push_back(tag);
      continue;
    }

    if (auto rest = keyword_rest(t, "Feature:")) {
      close();
      slug = slugify(*rest);
      if (slug.empty()) slug = "feature";
      index = 0;
      in_background = false;
      pending_tags.clear();
      continue;
    }
    if (keyword_rest(t, "Background:")) {
      close();
      in_background = true;
      continue;
    }

    std::optional<std::string_view> scenario_name;
    for (std::string_view kw : {"Scenario Outline:", "Scenario Template:", "Scenario:", "Example:"}) {
      if ((scenario_name = keyword_rest(t, kw))) break;
    }
    if (scenario_name) {
      close();
      in_background = false;
      ++index;
      current.emplace();
      std::string title = str::join(pending_tags, " ");
      if (!title.empty() && !scenario_name->empty()) title += " ";
      title += *scenario_name;
      current->title = std::move(title);
      pending_tags.clear();
      continue;
    }

    const bool examples = keyword_rest(t, "Examples:") || keyword_rest(t, "Scenarios:");
    const bool step = is_step_line(t);
    const bool row = t.front() == '|';

    if (in_background) {
      // Background steps are not part of any scenario body.
      if (row && t.back() != '|')
        throw Error(Errc::UnterminatedExamplesTable, std::to_string(lineno), "table row without closing '|'");
      continue;
    }
    if (!examples && !step && !row) continue;  // free-form description
    if (!current) throw Error(Errc::StepOutsideScenario, std::to_string(lineno));

    if (examples) {
      if (current->examples_line != 0)
        throw Error(Errc::UnterminatedExamplesTable, std::to_string(current->examples_line),
                    "Examples header without table rows");
      current->examples_line = lineno;
      current->steps.emplace_back("Examples:");
    } else if (row) {
      if (t.size() < 2 || t.back() != '|')
        throw Error(Errc::UnterminatedExamplesTable, std::to_string(lineno), "table row without closing '|'");
      current->examples_line = 0;
      current->steps.emplace_back(t);
    } else {
      if (current->examples_line != 0)
        throw Error(Errc::UnterminatedExamplesTable, std::to_string(current->examples_line),
                    "Examples header without table rows");
      current->steps.emplace_back(t);
    }
  }
  close();

  if (corpus.artefacts.empty()) throw Error(Errc::NoScenarios, "");
  return corpus;
}

std::string serialize_gherkin(const Corpus& corpus) {
  std::string out;
  std::string current_slug;
  bool any = false;
  for (const auto& a : corpus.artefacts) {
    const auto slash = a.id.rfind('/');
    const std::string slug = slash == std::string::npos ? a.id : a.id.substr(0, slash);
    if (!any || slug != current_slug) {
      if (any) out += "\n";
      out += "Feature: " + slug + "\n";
      current_slug = slug;
      any = true;
    }
    out += "\n";

    // Leading "@tag" words of the title are written back as a tag line.
    std::string_view title = a.title;
    std::vector<std::string_view> tags;
    while (!title.empty() && title.front() == '@') {
      auto sp = title.find(' ');
      tags.push_back(title.substr(0, sp));
      title = sp == std::string_view::npos ? std::string_view{} : title.substr(sp + 1);
    }
    if (!tags.empty()) out += "  " + str::join(tags, " ") + "\n";
    out += "  Scenario:";
    if (!title.empty()) {
      out += " ";
      out += title;
    }
    out += "\n";
    for (auto l : str::lines(a.body)) {
      const auto t = str::trim(l);
      if (t.empty()) continue;
      out += t.front() == '|' ? "      " : "    ";
      out += t;
      out += "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Test cases

Corpus parse_testcases(std::string_view text, std::string project_id) {
  Corpus corpus{std::move(project_id), ArtefactKind::TestCase, {}};
  IdRegistry ids;

  struct Block {
    std::string id;
    std::string title;
    std::vector<std::string> steps;
    std::vector<std::string> expects;
    std::string* last = nullptr;
  };
  std::optional<Block> current;

  auto flush = [&] {
    if (!current) return;
    if (current->steps.empty()) throw Error(Errc::MissingStep, current->id);
    if (current->expects.empty()) throw Error(Errc::MissingExpectation, current->id);
    ids.add(current->id);
    std::vector<std::string> body;
    for (const auto& s : current->steps) body.push_back("Step: " + s);
    for (const auto& e : current->expects) body.push_back("Expect: " + e);
    Artefact a;
    a.id = current->id;
    a.kind = ArtefactKind::TestCase;
    a.title = current->title;
    a.body = str::join(body, "\n");
    corpus.artefacts.push_back(std::move(a));
    current.reset();
  };

  for (auto line : str::lines(text)) {
    const auto t = str::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (auto header = match_header(line, "TC-")) {
      flush();
      current.emplace();
      current->id = header->first;
      current->title = header->second;
      continue;
    }
    if (!current) continue;
    if (auto rest = keyword_rest(t, "Step:")) {
      if (rest->empty()) continue;
      current->steps.emplace_back(*rest);
      current->last = &current->steps.back();
    } else if (auto rest2 = keyword_rest(t, "Expect:")) {
      if (rest2->empty()) continue;
      current->expects.emplace_back(*rest2);
      current->last = &current->expects.back();
    } else if (current->last) {
      *current->last += " ";
      *current->last += t;
    } else {
      if (!current->title.empty()) current->title += " ";
      current->title += t;
    }
  }
  flush();

  if (corpus.artefacts.empty()) throw Error(Errc::NoArtefactsFound, "");
  return corpus;
}

std::string serialize_testcases(const Corpus& corpus) {
  std::string out;
  bool first = true;
  for (const auto& a : corpus.artefacts) {
    if (!first) out += "\n";
    first = false;
    out += "TC-" + a.id + ":";
    if (!a.title.empty()) out += " " + a.title;
    out += "\n";
    for (auto l : str::lines(a.body)) {
      const auto t = str::trim(l);
      if (t.empty()) continue;
      out += t;
      out += "\n";
    }
  }
  return out;
}

Corpus parse_document(ArtefactKind kind, std::string_view text, std::string project_id) {
  switch (kind) {
    case ArtefactKind::Requirement: return parse_requirements(text, std::move(project_id));
    case ArtefactKind::TestCase: return parse_testcases(text, std::move(project_id));
    case ArtefactKind::BddScenario: return parse_gherkin(text, std::move(project_id));
  }
  return parse_requirements(text, std::move(project_id));
}

std::string serialize_document(const Corpus& corpus) {
  switch (corpus.kind) {
    case ArtefactKind::Requirement: return serialize_requirements(corpus);
    case ArtefactKind::TestCase: return serialize_testcases(corpus);
    case ArtefactKind::BddScenario: return serialize_gherkin(corpus);
  }
  return serialize_requirements(corpus);
}

std::string trace_requirement_id(const Artefact& artefact) {
  switch (artefact.kind) {
    case ArtefactKind::Requirement:
      return artefact.id;
    case ArtefactKind::TestCase: {
      const auto dash = artefact.id.rfind('-');
      if (dash == std::string::npos || dash == 0 || dash + 1 == artefact.id.size()) return artefact.id;
      for (auto i = dash + 1; i < artefact.id.size(); ++i)
        if (artefact.id[i] < '0' || artefact.id[i] > '9') return artefact.id;
      return artefact.id.substr(0, dash);
    }
    case ArtefactKind::BddScenario: {
      const auto slash = artefact.id.rfind('/');
      std::string slug = slash == std::string::npos ? artefact.id : artefact.id.substr(0, slash);
      if (slug.starts_with("REQ-") && slug.size() > 4) slug = slug.substr(4);
      return slug;
    }
  }
  return artefact.id;
}

}  // namespace qeloop
