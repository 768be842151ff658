#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace bed {

// A sentence keeps the lowercased token stream plus, per token, whether the
// original surface form started with an uppercase letter (the capitalized
// span strategy needs it).
struct Sentence {
  std::string id;
  std::string raw;
  std::vector<std::string> tokens;
  std::vector<char> capitalized;  // parallel to tokens

  int size() const { return static_cast<int>(tokens.size()); }
};

// Half-open token index range [begin, end).
struct TokenSpan {
  int begin = 0;
  int end = 0;

  int length() const { return end - begin; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

// Whitespace split, leading/trailing ASCII punctuation peeled off into
// one-char tokens, possessive "'s" split off, everything lowercased.
// "" yields an empty sequence.
std::vector<std::string> tokenize(const std::string& raw);

// Same tokenization; also records which tokens were originally capitalized.
Sentence make_sentence(const std::string& id, const std::string& raw);

// The built-in stopword list (identical to data/stopwords.txt).
const std::unordered_set<std::string>& default_stopwords();

// One lowercase stopword per line; '#' comments and blank lines skipped.
std::unordered_set<std::string> load_stopwords(const std::string& path);

bool is_punct_token(const std::string& tok);

enum class SpanStrategy { Capitalized, Exhaustive };

SpanStrategy span_strategy_from_string(const std::string& name);
std::string to_string(SpanStrategy s);

struct SpanConfig {
  SpanStrategy strategy = SpanStrategy::Capitalized;
  int max_len = 5;
  const std::unordered_set<std::string>* stopwords = nullptr;  // default list if null
};

// Candidate mention spans. Exhaustive: every span of length 1..max_len that
// is not made purely of stopwords/punctuation. Capitalized: maximal runs of
// originally-capitalized tokens and all their sub-spans up to max_len.
std::vector<TokenSpan> propose_spans(const Sentence& s, const SpanConfig& cfg);

}  // namespace bed
