#include "bed/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "bed/errors.hpp"

namespace bed {

using nlohmann::json;

bool CandidateSet::contains(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return true;
  }
  return false;
}

Bm25Index build_bm25_index(const KnowledgeBase& kb, double k1, double b) {
  if (kb.entities.empty()) throw DataError("cannot build BM25 index: empty KB");
  Bm25Index idx;
  idx.k1 = k1;
  idx.b = b;
  long total_len = 0;
  for (const auto& e : kb.entities) {
    int doc = idx.num_docs();
    idx.doc_ids.push_back(e.id);
    idx.doc_tokens.push_back(e.name_tokens);
    idx.doc_len.push_back(static_cast<int>(e.name_tokens.size()));
    idx.id_to_doc.emplace(e.id, doc);
    total_len += idx.doc_len.back();

    std::unordered_map<std::string, int> tf;
    for (const auto& t : e.name_tokens) ++tf[t];
    for (const auto& [tok, count] : tf) {
      ++idx.doc_freq[tok];
      idx.postings[tok].emplace_back(doc, count);
    }
  }
  idx.avg_doc_len = static_cast<double>(total_len) / idx.num_docs();
  return idx;
}

double bm25_idf(const Bm25Index& idx, const std::string& token) {
  auto it = idx.doc_freq.find(token);
  double df = it == idx.doc_freq.end() ? 0.0 : it->second;
  return std::log(1.0 + (idx.num_docs() - df + 0.5) / (df + 0.5));
}

namespace {

double term_contribution(const Bm25Index& idx, double idf, int tf, int len) {
  double denom = tf + idx.k1 * (1.0 - idx.b + idx.b * len / idx.avg_doc_len);
  return idf * tf * (idx.k1 + 1.0) / denom;
}

}  // namespace

double bm25_score(const Bm25Index& idx, const std::vector<std::string>& query,
                  const std::string& entity_id) {
  auto it = idx.id_to_doc.find(entity_id);
  if (it == idx.id_to_doc.end()) {
    throw DataError("bm25_score: unknown entity id " + entity_id);
  }
  const int doc = it->second;
  const auto& tokens = idx.doc_tokens[doc];
  double score = 0.0;
  for (const auto& q : query) {
    int tf = static_cast<int>(std::count(tokens.begin(), tokens.end(), q));
    if (tf == 0) continue;
    score += term_contribution(idx, bm25_idf(idx, q), tf, idx.doc_len[doc]);
  }
  return score;
}

CandidateSet generate_candidates(const Sentence& s, const Bm25Index& idx,
                                 int top_k, const SpanConfig& spans) {
  if (top_k < 1) throw DataError("generate_candidates: top_k must be >= 1");
  CandidateSet out;
  out.sentence_id = s.id;

  // Per-entity best span score, via postings so untouched entities stay at
  // an exact 0 and are dropped.
  std::unordered_map<int, double> best;
  std::unordered_map<int, double> acc;
  for (const TokenSpan& span : propose_spans(s, spans)) {
    acc.clear();
    for (int i = span.begin; i < span.end; ++i) {
      auto post = idx.postings.find(s.tokens[i]);
      if (post == idx.postings.end()) continue;
      double idf = bm25_idf(idx, s.tokens[i]);
      for (const auto& [doc, tf] : post->second) {
        acc[doc] += term_contribution(idx, idf, tf, idx.doc_len[doc]);
      }
    }
    for (const auto& [doc, score] : acc) {
      auto [it, inserted] = best.emplace(doc, score);
      if (!inserted && score > it->second) it->second = score;
    }
  }

  std::vector<std::pair<int, double>> ranked(best.begin(), best.end());
  std::sort(ranked.begin(), ranked.end(),
            [&](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return idx.doc_ids[a.first] < idx.doc_ids[b.first];
            });
  if (static_cast<int>(ranked.size()) > top_k) ranked.resize(top_k);
  for (const auto& [doc, score] : ranked) {
    out.entries.push_back({idx.doc_ids[doc], score});
  }
  return out;
}

double candidate_coverage(const std::vector<CandidateSet>& cands,
                          const std::vector<std::vector<Triple>>& gold) {
  if (cands.size() != gold.size()) {
    throw DataError("candidate_coverage: candidate/gold length mismatch (" +
                    std::to_string(cands.size()) + " vs " +
                    std::to_string(gold.size()) + ")");
  }
  long total = 0;
  long covered = 0;
  for (size_t i = 0; i < cands.size(); ++i) {
    for (const Triple& t : gold[i]) {
      total += 2;
      if (cands[i].contains(t.h)) ++covered;
      if (cands[i].contains(t.t)) ++covered;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(covered) / total;
}

void save_bm25_index(const Bm25Index& idx, const std::string& path) {
  json docs = json::array();
  for (int d = 0; d < idx.num_docs(); ++d) {
    docs.push_back({{"id", idx.doc_ids[d]}, {"tokens", idx.doc_tokens[d]}});
  }
  json j{{"k1", idx.k1}, {"b", idx.b}, {"documents", std::move(docs)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

Bm25Index load_bm25_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  // Stats are rebuilt from the stored documents, so a round-trip is exact.
  Bm25Index idx;
  idx.k1 = j.at("k1").get<double>();
  idx.b = j.at("b").get<double>();
  long total_len = 0;
  for (const auto& d : j.at("documents")) {
    int doc = idx.num_docs();
    idx.doc_ids.push_back(d.at("id").get<std::string>());
    idx.doc_tokens.push_back(d.at("tokens").get<std::vector<std::string>>());
    idx.doc_len.push_back(static_cast<int>(idx.doc_tokens.back().size()));
    if (!idx.id_to_doc.emplace(idx.doc_ids.back(), doc).second) {
      throw DataError(path + ": duplicate document id " + idx.doc_ids.back());
    }
    total_len += idx.doc_len.back();
    std::unordered_map<std::string, int> tf;
    for (const auto& t : idx.doc_tokens.back()) ++tf[t];
    for (const auto& [tok, count] : tf) {
      ++idx.doc_freq[tok];
      idx.postings[tok].emplace_back(doc, count);
    }
  }
  if (idx.num_docs() == 0) throw DataError(path + ": empty index");
  idx.avg_doc_len = static_cast<double>(total_len) / idx.num_docs();
  return idx;
}

void save_candidates_jsonl(const std::vector<CandidateSet>& cands,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& c : cands) {
    json entries = json::array();
    for (const auto& e : c.entries) {
      entries.push_back({{"id", e.id}, {"score", e.score}});
    }
    json j{{"sentence_id", c.sentence_id}, {"candidates", std::move(entries)}};
    out << j.dump() << "\n";
  }
}

std::vector<CandidateSet> load_candidates_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<CandidateSet> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    CandidateSet c;
    c.sentence_id = j.at("sentence_id").get<std::string>();
    for (const auto& e : j.at("candidates")) {
      c.entries.push_back(
          {e.at("id").get<std::string>(), e.at("score").get<double>()});
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace bed
