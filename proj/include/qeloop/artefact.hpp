#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qeloop {

enum class ArtefactKind { Requirement, TestCase, BddScenario };

enum class Origin { Original, ReverseGenerated, Unified, Degraded };

std::string_view to_string(ArtefactKind kind);
std::string_view to_string(Origin origin);

// Accepts the CLI spellings ("requirement", "testcase", "bdd") as well as
// the enumerator names.
std::optional<ArtefactKind> parse_kind(std::string_view name);
std::optional<Origin> parse_origin(std::string_view name);

struct Artefact {
  std::string id;
  ArtefactKind kind = ArtefactKind::Requirement;
  std::string title;
  std::string body;
  Origin origin = Origin::Original;
  std::uint32_t source_cycle = 0;

  friend bool operator==(const Artefact&, const Artefact&) = default;
};

struct Corpus {
  std::string project_id;
  ArtefactKind kind = ArtefactKind::Requirement;
  std::vector<Artefact> artefacts;

  const Artefact* find(std::string_view id) const;
  bool empty() const { return artefacts.empty(); }
  std::size_t size() const { return artefacts.size(); }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Throws Error(DuplicateId / EmptyBody / WrongKind) when an invariant of
// Artefact or Corpus does not hold.
void validate(const Corpus& corpus);

// Line-oriented document formats. All three are pure and order-preserving.
//
//   REQ-<id>: <body>          requirement; continuation lines append,
//     <continuation>          a blank line ends the requirement
//
//   Feature: <name>           BDD; one artefact per Scenario, id is
//     Scenario: <name>        "<feature-slug>/<index>"
//       Given ... / Then ...
//
//   TC-<id>: <title>          test case; at least one Step and one Expect
//   Step: <action>
//   Expect: <outcome>
Corpus parse_requirements(std::string_view text, std::string project_id = {});
Corpus parse_gherkin(std::string_view text, std::string project_id = {});
Corpus parse_testcases(std::string_view text, std::string project_id = {});
Corpus parse_document(ArtefactKind kind, std::string_view text, std::string project_id = {});

// Canonical document form ("\n" line endings). Re-parsing the output of a
// parsed corpus yields an equal corpus.
std::string serialize_requirements(const Corpus& corpus);
std::string serialize_gherkin(const Corpus& corpus);
std::string serialize_testcases(const Corpus& corpus);
std::string serialize_document(const Corpus& corpus);

// Feature-name slug: characters outside [A-Za-z0-9_.-] become '-', runs are
// collapsed and ends trimmed. Idempotent.
std::string slugify(std::string_view name);

// Requirement id a derived artefact traces back to:
//   TestCase "<req>-<n>"          -> "<req>"
//   BddScenario "REQ-<req>/<n>"   -> "<req>"   ("<slug>/<n>" -> "<slug>")
//   Requirement                   -> its own id
std::string trace_requirement_id(const Artefact& artefact);

}  // namespace qeloop
