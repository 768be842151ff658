#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bed/kb.hpp"
#include "bed/text.hpp"
#include "bed/types.hpp"

namespace bed {

struct CandidateEntry {
  std::string id;
  double score = 0.0;
};

// Retrieval output for one sentence: entity ids with BM25 scores, sorted by
// descending score (ties by ascending id), no duplicates, at most top-k
// entries. Gold augmentation during training may append unscored entries at
// the end (see train_pipeline).
struct CandidateSet {
  std::string sentence_id;
  std::vector<CandidateEntry> entries;

  bool contains(const std::string& id) const;
};

// Okapi BM25 over entity names, one document per entity, with the
// ln(1 + (|E| - df + 0.5)/(df + 0.5)) IDF. Immutable after build.
struct Bm25Index {
  double k1 = 1.2;
  double b = 0.75;
  std::vector<std::string> doc_ids;                    // KB entity order
  std::vector<std::vector<std::string>> doc_tokens;    // tokenized names
  std::vector<int> doc_len;
  double avg_doc_len = 0.0;
  std::unordered_map<std::string, int> doc_freq;
  // token -> (doc index, term frequency), doc indices ascending
  std::unordered_map<std::string, std::vector<std::pair<int, int>>> postings;
  std::unordered_map<std::string, int> id_to_doc;

  int num_docs() const { return static_cast<int>(doc_ids.size()); }
};

Bm25Index build_bm25_index(const KnowledgeBase& kb, double k1 = 1.2,
                           double b = 0.75);

double bm25_idf(const Bm25Index& idx, const std::string& token);

/// Sum over query tokens of idf * tf*(k1+1) / (tf + k1*(1-b+b*|d|/avgdl)).
/// Unknown tokens and tokens absent from the entity name contribute 0.
double bm25_score(const Bm25Index& idx, const std::vector<std::string>& query,
                  const std::string& entity_id);

/// Propose spans, score every entity by its best span, keep the top_k by
/// (score desc, id asc). Zero-score entities are never returned.
CandidateSet generate_candidates(const Sentence& s, const Bm25Index& idx,
                                 int top_k, const SpanConfig& spans = {});

/// Fraction of gold entity occurrences (subject and object counted
/// separately) present in the aligned candidate sets.
double candidate_coverage(const std::vector<CandidateSet>& cands,
                          const std::vector<std::vector<Triple>>& gold);

void save_bm25_index(const Bm25Index& idx, const std::string& path);
Bm25Index load_bm25_index(const std::string& path);

void save_candidates_jsonl(const std::vector<CandidateSet>& cands,
                           const std::string& path);
std::vector<CandidateSet> load_candidates_jsonl(const std::string& path);

}  // namespace bed
