#include "bed/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "bed/errors.hpp"

namespace bed {

namespace {

bool is_ascii_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

bool is_ascii_space(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::isspace(u);
}

bool is_ascii_upper(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::isupper(u);
}

std::string ascii_lower(std::string s) {
  for (char& c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u < 128) c = static_cast<char>(std::tolower(u));
  }
  return s;
}

struct RawToken {
  std::string text;  // lowercased
  bool capitalized = false;
};

// One whitespace-delimited chunk -> tokens. Leading punctuation is emitted
// first, then the core (with a possessive "'s" peeled off), then trailing
// punctuation in original order.
void split_chunk(const std::string& chunk, std::vector<RawToken>& out) {
  size_t lo = 0;
  size_t hi = chunk.size();
  while (lo < hi && is_ascii_punct(chunk[lo])) {
    out.push_back({std::string(1, chunk[lo]), false});
    ++lo;
  }
  std::vector<char> trailing;
  while (hi > lo && is_ascii_punct(chunk[hi - 1])) {
    trailing.push_back(chunk[hi - 1]);
    --hi;
  }
  if (hi > lo) {
    std::string core = chunk.substr(lo, hi - lo);
    std::string lower = ascii_lower(core);
    bool cap = is_ascii_upper(core[0]);
    if (lower.size() > 2 && lower.ends_with("'s")) {
      out.push_back({lower.substr(0, lower.size() - 2), cap});
      out.push_back({"'s", false});
    } else {
      out.push_back({lower, cap});
    }
  }
  for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) {
    out.push_back({std::string(1, *it), false});
  }
}

std::vector<RawToken> tokenize_cased(const std::string& raw) {
  std::vector<RawToken> out;
  size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_ascii_space(raw[i])) ++i;
    size_t start = i;
    while (i < raw.size() && !is_ascii_space(raw[i])) ++i;
    if (i > start) split_chunk(raw.substr(start, i - start), out);
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& raw) {
  std::vector<std::string> out;
  for (auto& t : tokenize_cased(raw)) out.push_back(std::move(t.text));
  return out;
}

Sentence make_sentence(const std::string& id, const std::string& raw) {
  Sentence s;
  s.id = id;
  s.raw = raw;
  for (auto& t : tokenize_cased(raw)) {
    s.tokens.push_back(std::move(t.text));
    s.capitalized.push_back(t.capitalized ? 1 : 0);
  }
  return s;
}

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",      "an",    "the",   "is",    "was",    "are",   "were",
      "be",     "been",  "being", "of",    "in",     "on",    "at",
      "to",     "for",   "with",  "by",    "from",   "as",    "and",
      "or",     "but",   "not",   "no",    "it",     "its",   "this",
      "that",   "these", "those", "he",    "she",    "they",  "his",
      "her",    "their", "we",    "our",   "i",      "my",    "you",
      "your",   "who",   "which", "what",  "where",  "when",  "how",
      "do",     "does",  "did",   "has",   "have",   "had",   "will",
      "would",  "can",   "could", "should", "may",   "might", "must",
      "about",  "into",  "over",  "under", "after",  "before", "between",
      "during", "near",  "'s"};
  return words;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.insert(ascii_lower(line));
  }
  return words;
}

bool is_punct_token(const std::string& tok) {
  if (tok.empty()) return false;
  return std::all_of(tok.begin(), tok.end(), is_ascii_punct);
}

SpanStrategy span_strategy_from_string(const std::string& name) {
  if (name == "capitalized") return SpanStrategy::Capitalized;
  if (name == "exhaustive") return SpanStrategy::Exhaustive;
  throw DataError("unknown span strategy: " + name);
}

std::string to_string(SpanStrategy s) {
  return s == SpanStrategy::Capitalized ? "capitalized" : "exhaustive";
}

namespace {

bool span_is_contentful(const Sentence& s, int begin, int end,
                        const std::unordered_set<std::string>& stop) {
  for (int i = begin; i < end; ++i) {
    const std::string& tok = s.tokens[i];
    if (!stop.count(tok) && !is_punct_token(tok)) return true;
  }
  return false;
}

}  // namespace

std::vector<TokenSpan> propose_spans(const Sentence& s, const SpanConfig& cfg) {
  const auto& stop = cfg.stopwords ? *cfg.stopwords : default_stopwords();
  const int n = s.size();
  std::vector<TokenSpan> spans;
  if (n == 0 || cfg.max_len < 1) return spans;

  if (cfg.strategy == SpanStrategy::Exhaustive) {
    for (int b = 0; b < n; ++b) {
      for (int len = 1; len <= cfg.max_len && b + len <= n; ++len) {
        if (span_is_contentful(s, b, b + len, stop)) {
          spans.push_back({b, b + len});
        }
      }
    }
    return spans;
  }

  // Capitalized: sub-spans of each maximal capitalized run.
  int i = 0;
  while (i < n) {
    if (!s.capitalized[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && s.capitalized[j]) ++j;
    for (int b = i; b < j; ++b) {
      for (int len = 1; len <= cfg.max_len && b + len <= j; ++len) {
        if (span_is_contentful(s, b, b + len, stop)) {
          spans.push_back({b, b + len});
        }
      }
    }
    i = j;
  }
  return spans;
}

}  // namespace bed
