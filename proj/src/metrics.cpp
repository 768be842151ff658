#include "bed/metrics.hpp"

#include <fstream>
#include <set>

#include "bed/errors.hpp"

namespace bed {

using nlohmann::json;

nlohmann::json EvalReport::to_json(bool with_sentences) const {
  json j{{"precision", precision}, {"recall", recall}, {"f1", f1},
         {"tp", tp},               {"fp", fp},         {"fn", fn}};
  if (with_sentences) {
    json per = json::array();
    for (const auto& s : per_sentence) {
      per.push_back({{"id", s.id}, {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}});
    }
    j["sentences"] = std::move(per);
  }
  return j;
}

EvalReport triple_prf(const std::vector<Prediction>& pred,
                      const std::vector<std::vector<Triple>>& gold) {
  if (pred.size() != gold.size()) {
    throw DataError("triple_prf: prediction/gold length mismatch (" +
                    std::to_string(pred.size()) + " vs " +
                    std::to_string(gold.size()) + ")");
  }
  EvalReport rep;
  for (size_t i = 0; i < pred.size(); ++i) {
    std::set<Triple> p(pred[i].triples.begin(), pred[i].triples.end());
    std::set<Triple> g(gold[i].begin(), gold[i].end());
    SentenceScore s;
    s.id = pred[i].sentence_id;
    for (const Triple& t : p) {
      if (g.count(t)) {
        ++s.tp;
      } else {
        ++s.fp;
      }
    }
    s.fn = static_cast<int>(g.size()) - s.tp;
    rep.tp += s.tp;
    rep.fp += s.fp;
    rep.fn += s.fn;
    rep.per_sentence.push_back(std::move(s));
  }
  rep.precision = rep.tp + rep.fp > 0
                      ? static_cast<double>(rep.tp) / (rep.tp + rep.fp)
                      : 0.0;
  rep.recall = rep.tp + rep.fn > 0
                   ? static_cast<double>(rep.tp) / (rep.tp + rep.fn)
                   : 0.0;
  rep.f1 = rep.precision + rep.recall > 0.0
               ? 2.0 * rep.precision * rep.recall /
                     (rep.precision + rep.recall)
               : 0.0;
  return rep;
}

void save_predictions_jsonl(const std::vector<Prediction>& preds,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& p : preds) {
    json triples = json::array();
    for (const auto& t : p.triples) triples.push_back({t.h, t.r, t.t});
    json j{{"id", p.sentence_id}, {"triples", std::move(triples)}};
    out << j.dump() << "\n";
  }
}

std::vector<Prediction> load_predictions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Prediction> out;
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
    Prediction p;
    p.sentence_id = j.at("id").get<std::string>();
    for (const auto& t : j.at("triples")) {
      p.triples.push_back({t.at(0).get<std::string>(),
                           t.at(1).get<std::string>(),
                           t.at(2).get<std::string>()});
    }
    out.push_back(std::move(p));
  }
  return out;
}

void save_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << report.to_json().dump(2) << "\n";
}

}  // namespace bed
