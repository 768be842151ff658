#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bed/kb.hpp"
#include "bed/nn.hpp"
#include "bed/rng.hpp"
#include "bed/types.hpp"
#include "bed/vocab.hpp"

namespace bed {

struct ModelConfig {
  int embed_dim = 64;
  int hidden_dim = 128;
  int ngram_max = 3;
  int max_desc_tokens = 32;
};

// All learned tensors of the bi-encoder-decoder. One word-embedding table is
// shared by the entity and sentence encoders, which ties surface forms in
// sentences to the same forms in entity names. Entities are never assigned
// id embeddings anywhere, so an entity unseen in training is usable the
// moment its text is encoded.
template <class S>
struct ModelParams {
  ModelConfig cfg;
  int vocab_size = 0;
  int n_relations = 0;

  ParamTensor<S> word_emb;                  // d_e x V
  GruParams<S> ent_enc, sent_enc, dec;      // d_e -> d_h each
  std::vector<ParamTensor<S>> attn_query;   // ngram_max tensors, d_h x d_h
  ParamTensor<S> attn_combine;              // d_h x d_h*(ngram_max+1)
  ParamTensor<S> ent_input_proj;            // d_e x d_h
  ParamTensor<S> rel_emb;                   // d_e x R
  ParamTensor<S> rel_head_w;                // R x d_h
  ParamTensor<S> rel_head_b;                // R x 1
  ParamTensor<S> bos_input;                 // d_e x 1
  ParamTensor<S> end_entity;                // d_h x 1

  void allocate(const ModelConfig& config, int vocab, int relations) {
    cfg = config;
    vocab_size = vocab;
    n_relations = relations;
    const int de = cfg.embed_dim;
    const int dh = cfg.hidden_dim;
    word_emb.name = "word_emb";
    word_emb.resize(de, vocab);
    ent_enc.init("ent_enc", de, dh);
    sent_enc.init("sent_enc", de, dh);
    dec.init("dec", de, dh);
    attn_query.resize(cfg.ngram_max);
    for (int n = 0; n < cfg.ngram_max; ++n) {
      attn_query[n].name = "attn.wq" + std::to_string(n + 1);
      attn_query[n].resize(dh, dh);
    }
    attn_combine.name = "attn.wc";
    attn_combine.resize(dh, dh * (cfg.ngram_max + 1));
    ent_input_proj.name = "ent_input_proj";
    ent_input_proj.resize(de, dh);
    rel_emb.name = "rel_emb";
    rel_emb.resize(de, relations);
    rel_head_w.name = "rel_head.w";
    rel_head_w.resize(relations, dh);
    rel_head_b.name = "rel_head.b";
    rel_head_b.resize(relations, 1);
    bos_input.name = "bos_input";
    bos_input.resize(de, 1);
    end_entity.name = "end_entity";
    end_entity.resize(dh, 1);
  }

  void init_random(const ModelConfig& config, int vocab, int relations,
                   uint64_t seed) {
    allocate(config, vocab, relations);
    auto refs = registry();
    init_uniform<S>(refs, seed);
  }

  ParamRefs<S> registry() {
    ParamRefs<S> out;
    out.push_back(&word_emb);
    ent_enc.collect(out);
    sent_enc.collect(out);
    dec.collect(out);
    for (auto& q : attn_query) out.push_back(&q);
    out.push_back(&attn_combine);
    out.push_back(&ent_input_proj);
    out.push_back(&rel_emb);
    out.push_back(&rel_head_w);
    out.push_back(&rel_head_b);
    out.push_back(&bos_input);
    out.push_back(&end_entity);
    return out;
  }

  ParamRefs<S> registry() const {
    return const_cast<ModelParams<S>*>(this)->registry();
  }

  void zero_grads() {
    for (auto* p : registry()) p->zero_grad();
  }

  long param_count() const {
    long total = 0;
    for (const auto* p : registry()) total += p->size();
    return total;
  }

  // Closed-form count from the configured dimensions; tests pin
  // param_count() == expected_param_count(...).
  static long expected_param_count(const ModelConfig& cfg, int vocab,
                                   int relations) {
    const long de = cfg.embed_dim;
    const long dh = cfg.hidden_dim;
    const long n = cfg.ngram_max;
    const long r = relations;
    const long gru = 3 * (dh * de + dh * dh + dh);
    return de * vocab + 3 * gru + n * dh * dh + dh * dh * (n + 1) + de * dh +
           r * de + r * dh + r + de + dh;
  }

  // FNV-1a over the raw bytes of every tensor in registry order; used to
  // verify that inference-time operations never touch the parameters.
  uint64_t checksum() const {
    uint64_t h = 0xCBF29CE484222325ull;
    for (const auto* p : registry()) {
      const unsigned char* bytes =
          reinterpret_cast<const unsigned char*>(p->value.data());
      const size_t nbytes = static_cast<size_t>(p->size()) * sizeof(S);
      for (size_t i = 0; i < nbytes; ++i) {
        h ^= bytes[i];
        h *= 0x100000001B3ull;
      }
    }
    return h;
  }
};

// ---------------------------------------------------------------------------
// Encoders
// ---------------------------------------------------------------------------

// Embedding columns for a token-id sequence.
template <class S>
Mat<S> embed_tokens(const ModelParams<S>& p, const std::vector<int>& ids) {
  Mat<S> x(p.cfg.embed_dim, static_cast<Eigen::Index>(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) = p.word_emb.value.col(ids[i]);
  }
  return x;
}

// h_e = mean over time of GRU hidden states of the entity text.
template <class S>
Vec<S> encode_entity(const ModelParams<S>& p, const std::vector<int>& ids) {
  if (ids.empty()) throw DataError("encode_entity: empty entity text");
  Mat<S> x = embed_tokens(p, ids);
  Mat<S> hs = run_gru<S>(p.ent_enc, x, Vec<S>::Zero(p.cfg.hidden_dim));
  return mean_pool<S>(hs);
}

template <class S>
struct SentenceCache {
  std::vector<int> ids;
  GruSeqCache<S> gru;
};

// Per-token contextual states, one column per word.
template <class S>
Mat<S> encode_sentence(const ModelParams<S>& p, const std::vector<int>& ids,
                       SentenceCache<S>* cache = nullptr) {
  if (ids.empty()) throw DataError("encode_sentence: empty sentence");
  Mat<S> x = embed_tokens(p, ids);
  if (cache) cache->ids = ids;
  return run_gru<S>(p.sent_enc, x, Vec<S>::Zero(p.cfg.hidden_dim),
                    cache ? &cache->gru : nullptr);
}

template <class S>
void encode_sentence_backward(ModelParams<S>& p, const SentenceCache<S>& cache,
                              const Mat<S>& dhs) {
  Mat<S> dx = Mat<S>::Zero(p.cfg.embed_dim, dhs.cols());
  Vec<S> dh0 = Vec<S>::Zero(p.cfg.hidden_dim);
  run_gru_backward<S>(p.sent_enc, cache.gru, dhs, dx, dh0);
  for (Eigen::Index i = 0; i < dx.cols(); ++i) {
    p.word_emb.grad.col(cache.ids[i]) += dx.col(i);
  }
}

// Batched entity encoding: all candidate texts of one example at once, so
// the per-step work is a handful of GEMMs instead of per-entity matvecs.
template <class S>
struct EntityBatchCache {
  std::vector<std::vector<int>> ids;
  std::vector<int> lengths;
  GruBatchCache<S> gru;
};

template <class S>
Mat<S> encode_entities_batch(const ModelParams<S>& p,
                             const std::vector<std::vector<int>>& token_ids,
                             EntityBatchCache<S>* cache = nullptr) {
  const int B = static_cast<int>(token_ids.size());
  if (B == 0) return Mat<S>(p.cfg.hidden_dim, 0);
  int t_max = 0;
  std::vector<int> lengths(B);
  for (int i = 0; i < B; ++i) {
    if (token_ids[i].empty()) {
      throw DataError("encode_entities_batch: empty entity text");
    }
    lengths[i] = static_cast<int>(token_ids[i].size());
    t_max = std::max(t_max, lengths[i]);
  }
  std::vector<Mat<S>> xs(t_max);
  for (int t = 0; t < t_max; ++t) {
    xs[t] = Mat<S>::Zero(p.cfg.embed_dim, B);
    for (int i = 0; i < B; ++i) {
      if (t < lengths[i]) {
        xs[t].col(i) = p.word_emb.value.col(token_ids[i][t]);
      }
    }
  }
  GruBatchCache<S> local;
  GruBatchCache<S>* gc = cache ? &cache->gru : &local;
  run_gru_batch<S>(p.ent_enc, xs, lengths, gc);

  // Mean-pool each column over its valid steps; while t < len_i the masked
  // state equals the plain cell output.
  Mat<S> pooled = Mat<S>::Zero(p.cfg.hidden_dim, B);
  for (int t = 0; t < t_max; ++t) {
    const auto& step = gc->steps[t];
    Mat<S> h_t = ((S(1) - step.z.array()) * step.h_prev.array() +
                  step.z.array() * step.g.array())
                     .matrix();
    for (int i = 0; i < B; ++i) {
      if (t < lengths[i]) pooled.col(i) += h_t.col(i) / S(lengths[i]);
    }
  }
  if (cache) {
    cache->ids = token_ids;
    cache->lengths = lengths;
  }
  return pooled;
}

template <class S>
void encode_entities_batch_backward(ModelParams<S>& p,
                                    const EntityBatchCache<S>& cache,
                                    const Mat<S>& dpooled) {
  const int B = static_cast<int>(cache.lengths.size());
  const int t_max = static_cast<int>(cache.gru.steps.size());
  std::vector<Mat<S>> dh_steps(t_max);
  for (int t = 0; t < t_max; ++t) {
    dh_steps[t] = Mat<S>::Zero(p.cfg.hidden_dim, B);
    for (int i = 0; i < B; ++i) {
      if (t < cache.lengths[i]) {
        dh_steps[t].col(i) = dpooled.col(i) / S(cache.lengths[i]);
      }
    }
  }
  std::vector<Mat<S>> dxs(t_max);
  for (int t = 0; t < t_max; ++t) dxs[t] = Mat<S>::Zero(p.cfg.embed_dim, B);
  Mat<S> dh_final = Mat<S>::Zero(p.cfg.hidden_dim, B);
  run_gru_batch_backward<S>(p.ent_enc, cache.gru, dh_steps, dh_final, dxs);
  for (int t = 0; t < t_max; ++t) {
    for (int i = 0; i < B; ++i) {
      if (t < cache.lengths[i]) {
        p.word_emb.grad.col(cache.ids[i][t]) += dxs[t].col(i);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// N-gram attention. For each window size n, sentence states are mean-pooled
// over sliding windows, scored against a per-n projection of the decoder
// state (scaled dot product), and combined:
//   out = tanh(Wc [h_dec; c1; ...; cN])
// Window sizes longer than the sentence contribute zero context.
// ---------------------------------------------------------------------------

template <class S>
struct AttentionCache {
  Vec<S> h_dec;
  int n_tokens = 0;
  std::vector<Mat<S>> pooled;   // per n: d_h x windows
  std::vector<Vec<S>> alpha;    // per n: attention weights
  std::vector<Vec<S>> query;    // per n: Wq^n h_dec
  Vec<S> concat;                // [h_dec; c1; ...; cN]
  Vec<S> out;
};

template <class S>
Vec<S> ngram_attention(const ModelParams<S>& p, const Vec<S>& h_dec,
                       const Mat<S>& hs, AttentionCache<S>* cache = nullptr) {
  const int dh = p.cfg.hidden_dim;
  const int n_tok = static_cast<int>(hs.cols());
  const int n_max = p.cfg.ngram_max;
  const S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));

  Vec<S> concat = Vec<S>::Zero(dh * (n_max + 1));
  concat.segment(0, dh) = h_dec;
  if (cache) {
    cache->h_dec = h_dec;
    cache->n_tokens = n_tok;
    cache->pooled.assign(n_max, Mat<S>());
    cache->alpha.assign(n_max, Vec<S>());
    cache->query.assign(n_max, Vec<S>());
  }
  for (int n = 1; n <= n_max; ++n) {
    const int windows = n_tok - n + 1;
    if (windows < 1) continue;  // zero-padded level
    Mat<S> pooled(dh, windows);
    for (int i = 0; i < windows; ++i) {
      pooled.col(i) = hs.middleCols(i, n).rowwise().mean();
    }
    Vec<S> q = p.attn_query[n - 1].value * h_dec;
    Vec<S> scores = (pooled.transpose() * q) * scale;
    Vec<S> alpha = softmax<S>(scores);
    concat.segment(n * dh, dh) = pooled * alpha;
    if (cache) {
      cache->pooled[n - 1] = std::move(pooled);
      cache->alpha[n - 1] = std::move(alpha);
      cache->query[n - 1] = std::move(q);
    }
  }
  Vec<S> out = (p.attn_combine.value * concat).array().tanh().matrix();
  if (cache) {
    cache->concat = concat;
    cache->out = out;
  }
  return out;
}

// Adds into attention parameter grads, dh_dec and dhs.
template <class S>
void ngram_attention_backward(ModelParams<S>& p, const AttentionCache<S>& c,
                              const Vec<S>& dout, Vec<S>& dh_dec, Mat<S>& dhs) {
  const int dh = p.cfg.hidden_dim;
  const int n_max = p.cfg.ngram_max;
  const S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));

  Vec<S> da = (dout.array() * (S(1) - c.out.array().square())).matrix();
  p.attn_combine.grad.noalias() += da * c.concat.transpose();
  Vec<S> dconcat = p.attn_combine.value.transpose() * da;
  dh_dec += dconcat.segment(0, dh);

  for (int n = 1; n <= n_max; ++n) {
    const int windows = c.n_tokens - n + 1;
    if (windows < 1) continue;
    const Mat<S>& pooled = c.pooled[n - 1];
    const Vec<S>& alpha = c.alpha[n - 1];
    const Vec<S>& q = c.query[n - 1];
    Vec<S> dc = dconcat.segment(n * dh, dh);

    // c = pooled * alpha
    Vec<S> dalpha = pooled.transpose() * dc;
    Mat<S> dpooled = dc * alpha.transpose();
    // alpha = softmax(pooled^T q * scale)
    Vec<S> dscores = softmax_backward<S>(alpha, dalpha);
    Vec<S> dq = (pooled * dscores) * scale;
    dpooled.noalias() += (q * dscores.transpose()) * scale;
    // q = Wq h_dec
    p.attn_query[n - 1].grad.noalias() += dq * c.h_dec.transpose();
    dh_dec.noalias() += p.attn_query[n - 1].value.transpose() * dq;
    // pooled.col(i) = mean(hs.cols(i..i+n-1))
    for (int i = 0; i < windows; ++i) {
      for (int k = 0; k < n; ++k) {
        dhs.col(i + k) += dpooled.col(i) / S(n);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Decoder step
// ---------------------------------------------------------------------------

// What the previous output token was; routes both the input projection and
// the backward pass.
struct PrevToken {
  enum class Kind { Bos, Entity, Relation };
  Kind kind = Kind::Bos;
  int index = -1;  // candidate index / relation index

  static PrevToken bos() { return {Kind::Bos, -1}; }
  static PrevToken entity(int cand) { return {Kind::Entity, cand}; }
  static PrevToken relation(int rel) { return {Kind::Relation, rel}; }
};

template <class S>
struct DecoderStepCache {
  PrevToken prev;
  bool entity_mode = true;
  bool allow_end = false;
  GruCellCache<S> gru;
  AttentionCache<S> attn;
  Vec<S> h_att;
  Vec<S> probs;
};

// One decode step: project the previous token into the decoder input space,
// advance the GRU, attend over the sentence, then score either the candidate
// entities (dot product, END appended when permitted) or the relation set.
template <class S>
Vec<S> decoder_step(const ModelParams<S>& p, const PrevToken& prev,
                    const Vec<S>& h_prev, const Mat<S>& hs,
                    const Mat<S>& cand_embs, bool entity_mode, bool allow_end,
                    Vec<S>& h_out, DecoderStepCache<S>* cache = nullptr) {
  if (entity_mode && cand_embs.cols() == 0) {
    throw DataError("decoder_step: entity mode with no candidates");
  }
  Vec<S> input;
  switch (prev.kind) {
    case PrevToken::Kind::Bos:
      input = p.bos_input.value.col(0);
      break;
    case PrevToken::Kind::Entity:
      input = p.ent_input_proj.value * cand_embs.col(prev.index);
      break;
    case PrevToken::Kind::Relation:
      if (prev.index < 0 || prev.index >= p.n_relations) {
        throw DataError("decoder_step: unknown relation index");
      }
      input = p.rel_emb.value.col(prev.index);
      break;
  }
  Vec<S> h_dec = gru_cell<S>(p.dec, input, h_prev, cache ? &cache->gru : nullptr);
  Vec<S> h_att = ngram_attention<S>(p, h_dec, hs, cache ? &cache->attn : nullptr);

  Vec<S> scores;
  if (entity_mode) {
    const Eigen::Index n = cand_embs.cols();
    scores.resize(n + (allow_end ? 1 : 0));
    scores.head(n) = cand_embs.transpose() * h_att;
    if (allow_end) scores(n) = p.end_entity.value.col(0).dot(h_att);
  } else {
    scores = p.rel_head_w.value * h_att + p.rel_head_b.value;
  }
  Vec<S> probs = softmax<S>(scores);
  h_out = h_dec;
  if (cache) {
    cache->prev = prev;
    cache->entity_mode = entity_mode;
    cache->allow_end = allow_end;
    cache->h_att = h_att;
    cache->probs = probs;
  }
  return probs;
}

// Backward for one step given dscores (gradient on the pre-softmax scores).
// Adds into parameter grads, dh_prev (BPTT chain), dhs (sentence states) and
// dcand (candidate embeddings).
template <class S>
void decoder_step_backward(ModelParams<S>& p, const DecoderStepCache<S>& c,
                           const Mat<S>& cand_embs, const Vec<S>& dscores,
                           const Vec<S>& dh_out, Vec<S>& dh_prev, Mat<S>& dhs,
                           Mat<S>& dcand) {
  const int dh = p.cfg.hidden_dim;
  Vec<S> dh_att = Vec<S>::Zero(dh);
  if (c.entity_mode) {
    const Eigen::Index n = cand_embs.cols();
    dh_att.noalias() += cand_embs * dscores.head(n);
    dcand.noalias() += c.h_att * dscores.head(n).transpose();
    if (c.allow_end) {
      dh_att += p.end_entity.value.col(0) * dscores(n);
      p.end_entity.grad.col(0) += c.h_att * dscores(n);
    }
  } else {
    dh_att.noalias() += p.rel_head_w.value.transpose() * dscores;
    p.rel_head_w.grad.noalias() += dscores * c.h_att.transpose();
    p.rel_head_b.grad.col(0) += dscores;
  }

  Vec<S> dh_dec = dh_out;  // chain from the next step
  ngram_attention_backward<S>(p, c.attn, dh_att, dh_dec, dhs);

  Vec<S> dinput = Vec<S>::Zero(p.cfg.embed_dim);
  gru_cell_backward<S>(p.dec, c.gru, dh_dec, dinput, dh_prev);

  switch (c.prev.kind) {
    case PrevToken::Kind::Bos:
      p.bos_input.grad.col(0) += dinput;
      break;
    case PrevToken::Kind::Entity:
      p.ent_input_proj.grad.noalias() +=
          dinput * cand_embs.col(c.prev.index).transpose();
      dcand.col(c.prev.index).noalias() +=
          p.ent_input_proj.value.transpose() * dinput;
      break;
    case PrevToken::Kind::Relation:
      p.rel_emb.grad.col(c.prev.index) += dinput;
      break;
  }
}

}  // namespace bed
