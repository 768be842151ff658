#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bed/errors.hpp"
#include "bed/kb.hpp"

namespace bed {

// Token-to-index map over the training corpus plus entity texts.
// Index 0/1/2 are reserved for [UNK]/[SEP]/[BOS]; out-of-vocabulary tokens
// map to [UNK].
struct Vocabulary {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;

  Vocabulary() {
    add(kUnkToken);
    add(kSepToken);
    add(kBosToken);
  }

  int size() const { return static_cast<int>(tokens.size()); }
  int unk() const { return 0; }

  int add(const std::string& tok) {
    auto [it, inserted] = index.emplace(tok, size());
    if (inserted) tokens.push_back(tok);
    return it->second;
  }

  void add_all(const std::vector<std::string>& toks) {
    for (const auto& t : toks) add(t);
  }

  int lookup(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? 0 : it->second;
  }

  std::vector<int> encode(const std::vector<std::string>& toks) const {
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(lookup(t));
    return ids;
  }

  nlohmann::json to_json() const { return nlohmann::json{{"tokens", tokens}}; }

  static Vocabulary from_json(const nlohmann::json& j) {
    Vocabulary v;
    auto toks = j.at("tokens").get<std::vector<std::string>>();
    if (toks.size() < 3 || toks[0] != kUnkToken || toks[1] != kSepToken ||
        toks[2] != kBosToken) {
      throw DataError("vocabulary: reserved tokens missing or reordered");
    }
    for (size_t i = 3; i < toks.size(); ++i) v.add(toks[i]);
    return v;
  }
};

}  // namespace bed
