#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qeloop/artefact.hpp"

namespace qeloop {

using WordSet = std::set<std::string>;

// Set of lowercase, non-empty, non-stopword tokens.
using TokenSet = std::set<std::string>;

// Plain-text word lists: one entry per line, '#' starts a comment, entries
// are lowercased and trimmed.
WordSet parse_word_list(std::string_view text);
WordSet load_word_list(const std::filesystem::path& path);

/// Every configurable vocabulary the lexical heuristics use. The built-in
/// defaults are identical to the files shipped under config/.
struct Lexicons {
  WordSet stopwords;
  WordSet verbs;
  WordSet ambiguity;  // phrases, matched on token boundaries
  WordSet actors;
  WordSet outcomes;
  WordSet negations;
  WordSet units;  // time/size units and number words that mark a quantity

  static const Lexicons& defaults();
};

struct Segment {
  std::string artefact_id;
  std::size_t index = 0;
  std::string text;

  // "<artefact_id>#<index>"
  std::string id() const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Lowercased word tokens in document order, duplicates kept.
std::vector<std::string> tokenize(std::string_view text);

TokenSet tokenize_normalize(std::string_view text, const WordSet& stopwords);

/// Splits a body into sentence-level texts.
///
/// A new unit starts at every line that opens with a bullet ("-", "*"), a
/// Gherkin step keyword, a "Step:"/"Expect:" label or a table row ('|');
/// other line breaks are treated as spaces. Inside a unit, text is cut after
/// '.', '!' or '?' when followed by whitespace or the end, unless the word is
/// a known abbreviation ("e.g.", "i.e.", ...). Bullet markers and Step/Expect
/// labels are stripped; pieces without a word character are dropped.
std::vector<std::string> split_segments(std::string_view body);

// Throws Error(EmptyAfterSegmentation, artefact id) when nothing survives.
std::vector<Segment> segment_artefact(const Artefact& artefact);

// Segments of every artefact, in corpus order. Artefacts that produce no
// segment are skipped.
std::vector<Segment> segment_corpus(const Corpus& corpus);

struct EntityVerbProfile {
  TokenSet entities;
  TokenSet verbs;
};

// A non-stopword token is a verb when it is in the verb lexicon or ends in
// "ify"/"ate" (tokens of six or more characters); every other non-stopword
// token is an entity.
EntityVerbProfile extract_entity_verbs(std::string_view text, const Lexicons& lex);
EntityVerbProfile extract_entity_verbs(const Segment& seg, const Lexicons& lex);

// Distinct lexicon phrases found in the text (token-boundary match).
std::vector<std::string> find_phrases(std::string_view text, const WordSet& phrases);

}  // namespace qeloop
