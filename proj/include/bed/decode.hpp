#pragma once

#include <set>
#include <string>
#include <vector>

#include "bed/metrics.hpp"
#include "bed/model.hpp"
#include "bed/types.hpp"

namespace bed {

// Greedy decoding: argmax at each step, modes cycling entity/relation/entity,
// END scored only at steps that would begin a new triple. Stops on END or
// after max_triples complete triples (forced stop). Ties break toward the
// lower candidate/relation index. An empty candidate set yields an empty
// prediction.
template <class S>
Prediction greedy_decode(const ModelParams<S>& params,
                         const std::string& sentence_id,
                         const std::vector<int>& sentence_ids,
                         const std::vector<std::string>& cand_ids,
                         const Mat<S>& cand_embs,
                         const std::vector<std::string>& relation_ids,
                         int max_triples = 8) {
  if (max_triples < 1) throw DataError("greedy_decode: max_triples must be >= 1");
  Prediction pred;
  pred.sentence_id = sentence_id;
  if (cand_ids.empty()) return pred;
  if (static_cast<Eigen::Index>(cand_ids.size()) != cand_embs.cols()) {
    throw DataError("greedy_decode: candidate ids/embeddings mismatch");
  }

  Mat<S> hs = encode_sentence<S>(params, sentence_ids);
  Vec<S> h = Vec<S>::Zero(params.cfg.hidden_dim);
  PrevToken prev = PrevToken::bos();
  Triple current;
  std::set<Triple> seen;
  int step = 0;
  while (true) {
    const int phase = step % 3;
    const bool entity_mode = phase != 1;
    const bool allow_end = phase == 0;
    Vec<S> h_out(params.cfg.hidden_dim);
    Vec<S> probs = decoder_step<S>(params, prev, h, hs, cand_embs, entity_mode,
                                   allow_end, h_out);
    h = h_out;

    // First strict maximum = lowest index on ties.
    int argmax = 0;
    for (int i = 1; i < probs.rows(); ++i) {
      if (probs(i) > probs(argmax)) argmax = i;
    }
    ++step;
    if (entity_mode && allow_end &&
        argmax == static_cast<int>(cand_ids.size())) {
      break;  // END
    }
    if (entity_mode) {
      prev = PrevToken::entity(argmax);
      if (phase == 0) {
        current.h = cand_ids[argmax];
      } else {
        current.t = cand_ids[argmax];
        if (seen.insert(current).second) pred.triples.push_back(current);
        if (step >= 3 * max_triples) {
          pred.forced_stop = true;
          break;
        }
      }
    } else {
      prev = PrevToken::relation(argmax);
      current.r = relation_ids[argmax];
    }
  }
  pred.steps_taken = step;
  return pred;
}

}  // namespace bed
