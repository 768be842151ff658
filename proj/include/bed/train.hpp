#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "bed/adam.hpp"
#include "bed/bm25.hpp"
#include "bed/kb.hpp"
#include "bed/model.hpp"
#include "bed/rng.hpp"
#include "bed/text.hpp"
#include "bed/types.hpp"
#include "bed/vocab.hpp"

namespace bed {

// ---------------------------------------------------------------------------
// Target linearization: [h1, r1, t1, ..., hm, rm, tm, END]
// ---------------------------------------------------------------------------

enum class StepMode { Entity, Relation, End };

struct TargetStep {
  StepMode mode;
  std::string id;  // empty for End
};

struct TargetSequence {
  std::vector<TargetStep> steps;

  size_t size() const { return steps.size(); }
};

inline TargetSequence linearize_triples(const std::vector<Triple>& triples) {
  TargetSequence seq;
  for (const Triple& t : triples) {
    seq.steps.push_back({StepMode::Entity, t.h});
    seq.steps.push_back({StepMode::Relation, t.r});
    seq.steps.push_back({StepMode::Entity, t.t});
  }
  seq.steps.push_back({StepMode::End, ""});
  return seq;
}

// (entity, relation, entity)* end — anything else is a malformed sequence.
inline void validate_target_pattern(const TargetSequence& seq) {
  const size_t n = seq.size();
  if (n == 0 || n % 3 != 1) {
    throw DataError("target sequence length must be 3m+1");
  }
  for (size_t t = 0; t < n; ++t) {
    StepMode expect = t + 1 == n         ? StepMode::End
                      : (t % 3 == 1)     ? StepMode::Relation
                                         : StepMode::Entity;
    if (seq.steps[t].mode != expect) {
      throw DataError("target sequence violates the (e,r,e)* end pattern");
    }
  }
}

// Appends gold entities missing from the retrieved candidates. Injected
// entries carry an infinite sentinel score, sit at the end of the list and
// never perturb the retrieved ranking. Training-time only.
inline CandidateSet augment_candidates(const CandidateSet& cands,
                                       const std::vector<Triple>& gold,
                                       const KnowledgeBase& kb) {
  CandidateSet out = cands;
  auto add_missing = [&](const std::string& id) {
    if (!kb.find_entity(id)) {
      throw DataError("gold entity " + id + " is not in the KB");
    }
    if (!out.contains(id)) {
      out.entries.push_back({id, std::numeric_limits<double>::infinity()});
    }
  };
  for (const Triple& t : gold) {
    add_missing(t.h);
    add_missing(t.t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Teacher-forced sequence loss
// ---------------------------------------------------------------------------

// A dataset example resolved against vocabulary and candidate set:
// token ids for the sentence and every candidate text, plus per-step targets.
// In entity mode, target == #candidates denotes END.
struct EncodedExample {
  std::string id;
  std::vector<int> sentence_ids;
  std::vector<std::vector<int>> cand_texts;
  struct Step {
    bool entity_mode = true;
    bool allow_end = false;
    int target = 0;
  };
  std::vector<Step> steps;
};

inline EncodedExample build_encoded_example(
    const Sentence& sent, const CandidateSet& cands,
    const TargetSequence& target, const KnowledgeBase& kb,
    const Vocabulary& vocab, int max_desc_tokens) {
  validate_target_pattern(target);
  if (sent.tokens.empty()) {
    throw DataError("sentence " + sent.id + " has no tokens");
  }
  EncodedExample ex;
  ex.id = sent.id;
  ex.sentence_ids = vocab.encode(sent.tokens);
  for (const auto& entry : cands.entries) {
    const Entity* e = kb.find_entity(entry.id);
    if (!e) throw DataError("candidate entity " + entry.id + " not in KB");
    ex.cand_texts.push_back(vocab.encode(entity_text(*e, max_desc_tokens)));
  }
  const int n_cands = static_cast<int>(cands.entries.size());
  for (size_t t = 0; t < target.size(); ++t) {
    EncodedExample::Step step;
    step.allow_end = (t % 3 == 0);
    const TargetStep& ts = target.steps[t];
    switch (ts.mode) {
      case StepMode::Entity: {
        step.entity_mode = true;
        int idx = -1;
        for (int i = 0; i < n_cands; ++i) {
          if (cands.entries[i].id == ts.id) {
            idx = i;
            break;
          }
        }
        if (idx < 0) {
          throw DataError("gold entity " + ts.id +
                          " missing from candidate set of " + sent.id);
        }
        step.target = idx;
        break;
      }
      case StepMode::Relation: {
        step.entity_mode = false;
        int idx = kb.relation_index(ts.id);
        if (idx < 0) throw DataError("unknown relation id " + ts.id);
        step.target = idx;
        break;
      }
      case StepMode::End:
        step.entity_mode = true;
        step.target = n_cands;
        break;
    }
    ex.steps.push_back(step);
  }
  return ex;
}

// Mean over steps of -log p(y_t) under teacher forcing. Candidate entity
// embeddings are recomputed from the current parameters on every call so the
// entity encoder receives gradient through the scores. With with_grad,
// gradients are accumulated into the parameter tensors.
template <class S>
S sequence_loss(ModelParams<S>& params, const EncodedExample& ex,
                bool with_grad) {
  const int T = static_cast<int>(ex.steps.size());
  const int N = static_cast<int>(ex.cand_texts.size());
  SentenceCache<S> sent_cache;
  Mat<S> hs = encode_sentence<S>(params, ex.sentence_ids, &sent_cache);
  EntityBatchCache<S> ent_cache;
  Mat<S> cand_embs =
      encode_entities_batch<S>(params, ex.cand_texts, &ent_cache);

  std::vector<DecoderStepCache<S>> caches(T);
  Vec<S> h = Vec<S>::Zero(params.cfg.hidden_dim);
  S loss = S(0);
  for (int t = 0; t < T; ++t) {
    PrevToken prev = PrevToken::bos();
    if (t > 0) {
      const auto& prev_step = ex.steps[t - 1];
      prev = prev_step.entity_mode ? PrevToken::entity(prev_step.target)
                                   : PrevToken::relation(prev_step.target);
    }
    Vec<S> h_out(params.cfg.hidden_dim);
    Vec<S> probs =
        decoder_step<S>(params, prev, h, hs, cand_embs, ex.steps[t].entity_mode,
                        ex.steps[t].allow_end, h_out, &caches[t]);
    loss += cross_entropy<S>(probs, ex.steps[t].target);
    h = h_out;
  }
  loss /= S(T);

  if (with_grad) {
    const S inv_t = S(1) / S(T);
    Mat<S> dhs = Mat<S>::Zero(hs.rows(), hs.cols());
    Mat<S> dcand = Mat<S>::Zero(params.cfg.hidden_dim, N);
    Vec<S> dh_chain = Vec<S>::Zero(params.cfg.hidden_dim);
    for (int t = T - 1; t >= 0; --t) {
      Vec<S> dscores =
          softmax_xent_backward<S>(caches[t].probs, ex.steps[t].target, inv_t);
      Vec<S> dh_prev = Vec<S>::Zero(params.cfg.hidden_dim);
      decoder_step_backward<S>(params, caches[t], cand_embs, dscores, dh_chain,
                               dh_prev, dhs, dcand);
      dh_chain = dh_prev;
    }
    if (N > 0) encode_entities_batch_backward<S>(params, ent_cache, dcand);
    encode_sentence_backward<S>(params, sent_cache, dhs);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Optimization loop
// ---------------------------------------------------------------------------

struct TrainOptions {
  int epochs = 300;
  int batch_size = 16;
  double lr = 1e-3;
  double clip_norm = 5.0;
  int patience = 10;
  uint64_t seed = 7;
  double early_stop_loss = 0.0;  // 0 disables the loss-threshold exit
  std::ostream* log = nullptr;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

// Seeded-shuffle epochs, gradient accumulation per batch, global-norm clip,
// Adam. Stops early after `patience` epochs without improvement of the epoch
// mean loss, or once the mean loss falls under early_stop_loss.
template <class S>
std::vector<EpochStats> train_model(ModelParams<S>& params,
                                    const std::vector<EncodedExample>& examples,
                                    const TrainOptions& opt) {
  if (examples.empty()) throw DataError("train: empty dataset");
  auto refs = params.registry();
  AdamState<S> adam;
  adam.lr = static_cast<S>(opt.lr);
  adam.reset(refs);
  auto rng = make_rng(opt.seed, /*stream=*/2);

  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochStats> stats;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle(order, rng);
    double loss_sum = 0.0;
    size_t done = 0;
    while (done < order.size()) {
      const size_t batch_end =
          std::min(done + static_cast<size_t>(opt.batch_size), order.size());
      const S batch_n = static_cast<S>(batch_end - done);
      for (size_t k = done; k < batch_end; ++k) {
        S loss = sequence_loss<S>(params, examples[order[k]], /*with_grad=*/true);
        if (!std::isfinite(static_cast<double>(loss))) {
          throw NumericError("non-finite loss at epoch " +
                             std::to_string(epoch) + ", example " +
                             examples[order[k]].id);
        }
        loss_sum += static_cast<double>(loss);
      }
      for (auto* p : refs) p->grad /= batch_n;
      clip_gradients<S>(refs, static_cast<S>(opt.clip_norm));
      adam.step(refs);
      done = batch_end;
    }
    const double mean_loss = loss_sum / static_cast<double>(examples.size());
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    stats.push_back({epoch, mean_loss, seconds});
    if (opt.log) {
      (*opt.log) << "epoch " << epoch << " loss " << mean_loss << " ("
                 << seconds << "s)\n";
    }
    if (mean_loss < best_loss) {
      best_loss = mean_loss;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
    if (opt.early_stop_loss > 0.0 && mean_loss < opt.early_stop_loss) break;
  }
  return stats;
}

}  // namespace bed
