#include "qeloop/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "qeloop/error.hpp"
#include "qeloop/strings.hpp"

namespace qeloop {

WordSet parse_word_list(std::string_view text) {
  WordSet out;
  for (auto line : str::lines(text)) {
    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const auto t = str::trim(line);
    if (!t.empty()) out.insert(str::lower(t));
  }
  return out;
}

WordSet load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, path.string(), "cannot read word list");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_word_list(ss.str());
}

const Lexicons& Lexicons::defaults() {
  static const Lexicons lex = [] {
    Lexicons l;
    l.stopwords = {
        "a",       "about",   "above",   "across",  "after",   "again",   "against", "all",
        "also",    "am",      "an",      "and",     "any",     "are",     "as",      "at",
        "be",      "because", "been",    "before",  "being",   "below",   "between", "both",
        "but",     "by",      "can",     "could",   "did",     "do",      "does",    "doing",
        "down",    "during",  "each",    "eg",      "either",  "else",    "etc",     "every",
        "few",     "for",     "from",    "further", "given",   "had",     "has",     "have",
        "having",  "he",      "her",     "here",    "hers",    "him",     "his",     "how",
        "i",       "ie",      "if",      "in",      "into",    "is",      "it",      "its",
        "itself",  "just",    "may",     "me",      "might",   "more",    "most",    "must",
        "my",      "of",      "off",     "on",      "once",    "only",    "onto",    "or",
        "other",   "our",     "ours",    "out",     "over",    "own",     "same",    "shall",
        "she",     "should",  "so",      "some",    "such",    "than",    "that",    "the",
        "their",   "them",    "then",    "there",   "these",   "they",    "this",    "those",
        "through", "thus",    "to",      "too",     "under",   "until",   "up",      "upon",
        "us",      "very",    "via",     "was",     "we",      "were",    "what",    "when",
        "where",   "whether", "which",   "while",   "who",     "whom",    "why",     "will",
        "with",    "within",  "would",   "you",     "your",    "yours",
    };
    l.verbs = {
        "accept",    "alert",     "allow",    "approve",  "archive",  "authenticate", "authorize",
        "block",     "calculate", "cancel",   "check",    "compute",  "confirm",      "create",
        "decrypt",   "delete",    "deny",     "disable",  "display",  "download",     "enable",
        "encrypt",   "expire",    "export",   "filter",   "generate", "hide",         "import",
        "limit",     "load",      "lock",     "log",      "login",    "logout",       "notify",
        "prevent",   "print",     "process",  "record",   "redirect", "refresh",      "register",
        "reject",    "remove",    "reset",    "respond",  "restrict", "retry",        "return",
        "save",      "schedule",  "search",   "send",     "show",     "sort",         "store",
        "submit",    "suspend",   "track",    "trigger",  "unlock",   "update",       "upload",
        "validate",  "verify",
    };
    l.ambiguity = {
        "adequate",    "appropriate",    "as needed", "easy",       "efficient",
        "etc.",        "fast",           "flexible",  "if possible", "intuitive",
        "may",         "quickly",        "reasonable", "robust",    "seamless",
        "should be able", "sufficient",  "user-friendly",
    };
    l.actors = {
        "admin",    "administrator", "api",      "app",    "application", "auditor",
        "client",   "customer",      "manager",  "module", "operator",    "platform",
        "portal",   "reviewer",      "server",   "service", "system",     "user",
        "users",
    };
    l.outcomes = {
        "accepted",  "blocked",   "confirmed", "created",     "deleted",  "denied",
        "displayed", "error",     "expect",    "expected",    "exported", "generated",
        "granted",   "locked",    "logged",    "message",     "notification", "notified",
        "prevented", "received",  "recorded",  "redirected",  "rejected", "removed",
        "result",    "results",   "returned",  "saved",       "sent",     "shown",
        "stored",    "success",   "suspended", "then",        "triggered", "unlocked",
        "updated",
    };
    l.negations = {"cannot", "never", "neither", "no", "none", "nor", "not", "nothing", "without"};
    l.units = {
        "day",     "days",    "eight",   "five",    "four",    "gb",     "hour",    "hours",
        "hundred", "kb",      "mb",      "millisecond", "milliseconds", "minute", "minutes", "month",
        "months",  "ms",      "nine",    "once",    "one",     "percent", "second",  "seconds",
        "seven",   "six",     "ten",     "thousand", "three",  "times",  "twice",   "two",
        "week",    "weeks",   "year",    "years",
    };
    return l;
  }();
  return lex;
}

std::string Segment::id() const { return artefact_id + "#" + std::to_string(index); }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (str::is_word_byte(c)) {
      cur += str::to_lower(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TokenSet tokenize_normalize(std::string_view text, const WordSet& stopwords) {
  TokenSet out;
  for (auto& t : tokenize(text))
    if (!stopwords.contains(t)) out.insert(std::move(t));
  return out;
}

namespace {

bool starts_with_word(std::string_view t, std::string_view word) {
  return t.starts_with(word) && (t.size() == word.size() || t[word.size()] == ' ' || t[word.size()] == '\t');
}

bool is_step_keyword_line(std::string_view t) {
  for (std::string_view kw : {"Given", "When", "Then", "And", "But"})
    if (starts_with_word(t, kw)) return true;
  return false;
}

bool is_bullet(std::string_view t) { return !t.empty() && (t.front() == '-' || t.front() == '*'); }

bool is_label(std::string_view t) { return t.starts_with("Step:") || t.starts_with("Expect:"); }

bool is_table_header(std::string_view t) { return t == "Examples:" || t == "Scenarios:"; }

// Repeatedly strips bullet markers and Step/Expect labels so that segmenting
// a segment's own text is a fixpoint.
std::string normalize_piece(std::string_view p) {
  auto t = str::trim(p);
  while (true) {
    if (is_bullet(t)) {
      t = str::trim(t.substr(1));
    } else if (t.starts_with("Step:")) {
      t = str::trim(t.substr(5));
    } else if (t.starts_with("Expect:")) {
      t = str::trim(t.substr(7));
    } else {
      break;
    }
  }
  if (is_table_header(t)) return {};
  return std::string(t);
}

bool is_abbreviation(std::string_view text, std::size_t dot) {
  static const std::set<std::string, std::less<>> kAbbrev = {"e.g.", "i.e.", "vs.", "cf.", "approx.", "a.k.a."};
  std::size_t b = dot;
  while (b > 0 && !str::is_space(text[b - 1])) --b;
  auto word = text.substr(b, dot - b + 1);
  while (!word.empty() && !str::is_word_byte(word.front())) word.remove_prefix(1);
  return kAbbrev.contains(str::lower(word));
}

void split_sentences(std::string_view block, std::vector<std::string>& out) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    const char c = block[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool boundary = i + 1 == block.size() || str::is_space(block[i + 1]);
    if (!boundary) continue;
    if (c == '.' && is_abbreviation(block, i)) continue;
    out.emplace_back(block.substr(start, i + 1 - start));
    start = i + 1;
  }
  if (start < block.size()) out.emplace_back(block.substr(start));
}

}  // namespace

std::vector<std::string> split_segments(std::string_view body) {
  struct Block {
    std::string text;
    bool row = false;
  };
  std::vector<Block> blocks;
  std::string current;
  auto close = [&] {
    if (!current.empty()) blocks.push_back({std::move(current), false});
    current.clear();
  };

  for (auto line : str::lines(body)) {
    const auto t = str::trim(line);
    if (t.empty()) {
      close();
      continue;
    }
    if (t.front() == '|') {
      close();
      blocks.push_back({std::string(t), true});
      continue;
    }
    if (is_table_header(t)) {
      close();
      continue;
    }
    if (is_bullet(t) || is_step_keyword_line(t) || is_label(t)) {
      close();
      current = std::string(t);
      continue;
    }
    if (!current.empty()) current += ' ';
    current += t;
  }
  close();

  std::vector<std::string> out;
  for (const auto& b : blocks) {
    if (b.row) {
      if (str::has_word_byte(b.text)) out.push_back(b.text);
      continue;
    }
    std::vector<std::string> pieces;
    split_sentences(b.text, pieces);
    for (const auto& p : pieces) {
      auto n = normalize_piece(p);
      if (str::has_word_byte(n)) out.push_back(std::move(n));
    }
  }
  return out;
}

std::vector<Segment> segment_artefact(const Artefact& artefact) {
  std::vector<Segment> out;
  for (auto& text : split_segments(artefact.body)) {
    out.push_back({artefact.id, out.size(), std::move(text)});
  }
  if (out.empty()) throw Error(Errc::EmptyAfterSegmentation, artefact.id);
  return out;
}

std::vector<Segment> segment_corpus(const Corpus& corpus) {
  std::vector<Segment> out;
  for (const auto& a : corpus.artefacts) {
    std::size_t i = 0;
    for (auto& text : split_segments(a.body)) out.push_back({a.id, i++, std::move(text)});
  }
  return out;
}

EntityVerbProfile extract_entity_verbs(std::string_view text, const Lexicons& lex) {
  EntityVerbProfile profile;
  for (auto& t : tokenize_normalize(text, lex.stopwords)) {
    const bool suffix = t.size() >= 6 && (t.ends_with("ify") || t.ends_with("ate"));
    if (lex.verbs.contains(t) || suffix)
      profile.verbs.insert(std::move(t));
    else
      profile.entities.insert(std::move(t));
  }
  return profile;
}

EntityVerbProfile extract_entity_verbs(const Segment& seg, const Lexicons& lex) {
  return extract_entity_verbs(seg.text, lex);
}

std::vector<std::string> find_phrases(std::string_view text, const WordSet& phrases) {
  const auto tokens = tokenize(text);
  std::vector<std::string> hits;
  for (const auto& phrase : phrases) {
    const auto pt = tokenize(phrase);
    if (pt.empty() || pt.size() > tokens.size()) continue;
    const auto it = std::search(tokens.begin(), tokens.end(), pt.begin(), pt.end());
    if (it != tokens.end()) hits.push_back(phrase);
  }
  return hits;
}

}  // namespace qeloop
