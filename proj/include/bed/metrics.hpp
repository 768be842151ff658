#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bed/types.hpp"

namespace bed {

// Decoded triples for one sentence. Duplicates are removed before scoring.
struct Prediction {
  std::string sentence_id;
  std::vector<Triple> triples;
  int steps_taken = 0;
  bool forced_stop = false;
};

struct SentenceScore {
  std::string id;
  int tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  long tp = 0, fp = 0, fn = 0;
  std::vector<SentenceScore> per_sentence;

  nlohmann::json to_json(bool with_sentences = true) const;
};

// Micro-averaged precision/recall/F1 over exact triple matches. Precision is
// 0 when nothing was predicted; F1 is 0 when P + R is 0. Both prediction and
// gold sides are set-deduplicated.
EvalReport triple_prf(const std::vector<Prediction>& pred,
                      const std::vector<std::vector<Triple>>& gold);

void save_predictions_jsonl(const std::vector<Prediction>& preds,
                            const std::string& path);
std::vector<Prediction> load_predictions_jsonl(const std::string& path);

void save_report(const EvalReport& report, const std::string& path);

}  // namespace bed
