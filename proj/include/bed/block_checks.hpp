#pragma once

#include <string>
#include <vector>

#include "bed/gradcheck.hpp"
#include "bed/model.hpp"
#include "bed/train.hpp"

namespace bed {

struct BlockCheckResult {
  std::string block;
  GradCheckReport report;
};

// Finite-difference verification of every differentiable block, in double,
// at small dimensions, across several seeds. Inputs (x, h, sentence states,
// candidate embeddings) are treated as parameters so their gradients are
// checked too.
inline std::vector<BlockCheckResult> run_block_checks(int dims, int n_seeds,
                                                      double eps = 1e-5) {
  if (dims < 2 || dims > 8) throw DataError("block checks expect dims in [2,8]");
  std::vector<BlockCheckResult> results;

  auto track_max = [](BlockCheckResult& acc, const GradCheckReport& rep) {
    if (rep.max_rel_err >= acc.report.max_rel_err) {
      acc.report.max_rel_err = rep.max_rel_err;
      acc.report.worst_param = rep.worst_param;
    }
    acc.report.checked += rep.checked;
  };

  const int d_e = std::max(2, dims - 1);
  const int d_h = dims;

  // --- GRU cell --------------------------------------------------------
  {
    BlockCheckResult acc{"gru_cell", {}};
    for (int seed = 1; seed <= n_seeds; ++seed) {
      GruParams<double> gru;
      gru.init("gru", d_e, d_h);
      ParamTensor<double> x{"x", {}, {}}, h_prev{"h_prev", {}, {}};
      x.resize(d_e, 1);
      h_prev.resize(d_h, 1);
      ParamRefs<double> refs;
      gru.collect(refs);
      refs.push_back(&x);
      refs.push_back(&h_prev);
      init_uniform<double>(refs, seed);
      Vec<double> w(d_h);
      auto wrng = make_rng(seed, 99);
      for (int i = 0; i < d_h; ++i) w(i) = next_uniform(wrng, -1.0, 1.0);

      auto loss = [&](bool with_grad) {
        GruCellCache<double> cache;
        Vec<double> h = gru_cell<double>(gru, x.value.col(0), h_prev.value.col(0),
                                         with_grad ? &cache : nullptr);
        if (with_grad) {
          Vec<double> dx = Vec<double>::Zero(d_e);
          Vec<double> dh_prev = Vec<double>::Zero(d_h);
          gru_cell_backward<double>(gru, cache, w, dx, dh_prev);
          x.grad.col(0) += dx;
          h_prev.grad.col(0) += dh_prev;
        }
        return w.dot(h);
      };
      track_max(acc, grad_check(refs, loss, eps));
    }
    results.push_back(acc);
  }

  // --- Encoder: run_gru + mean_pool ------------------------------------
  {
    BlockCheckResult acc{"encoder_meanpool", {}};
    for (int seed = 1; seed <= n_seeds; ++seed) {
      const int T = 2 + (seed % 3);
      GruParams<double> gru;
      gru.init("enc", d_e, d_h);
      ParamTensor<double> seq{"seq", {}, {}};
      seq.resize(d_e, T);
      ParamRefs<double> refs;
      gru.collect(refs);
      refs.push_back(&seq);
      init_uniform<double>(refs, seed + 100);
      Vec<double> w(d_h);
      auto wrng = make_rng(seed, 98);
      for (int i = 0; i < d_h; ++i) w(i) = next_uniform(wrng, -1.0, 1.0);

      auto loss = [&](bool with_grad) {
        GruSeqCache<double> cache;
        Mat<double> hs = run_gru<double>(gru, seq.value, Vec<double>::Zero(d_h),
                                         with_grad ? &cache : nullptr);
        Vec<double> pooled = mean_pool<double>(hs);
        if (with_grad) {
          Mat<double> dhs(d_h, T);
          for (int t = 0; t < T; ++t) dhs.col(t) = w / double(T);
          Mat<double> dseq = Mat<double>::Zero(d_e, T);
          Vec<double> dh0 = Vec<double>::Zero(d_h);
          run_gru_backward<double>(gru, cache, dhs, dseq, dh0);
          seq.grad += dseq;
        }
        return w.dot(pooled);
      };
      track_max(acc, grad_check(refs, loss, eps));
    }
    results.push_back(acc);
  }

  // --- N-gram attention -------------------------------------------------
  {
    BlockCheckResult acc{"ngram_attention", {}};
    for (int seed = 1; seed <= n_seeds; ++seed) {
      ModelConfig cfg;
      cfg.embed_dim = d_e;
      cfg.hidden_dim = d_h;
      cfg.ngram_max = 3;
      ModelParams<double> params;
      params.allocate(cfg, /*vocab=*/4, /*relations=*/2);
      // n_tok = 2 exercises the zero-padded third level.
      const int n_tok = 2 + (seed % 3);
      ParamTensor<double> h_dec{"h_dec", {}, {}}, hs{"hs", {}, {}};
      h_dec.resize(d_h, 1);
      hs.resize(d_h, n_tok);
      ParamRefs<double> refs;
      for (auto& q : params.attn_query) refs.push_back(&q);
      refs.push_back(&params.attn_combine);
      refs.push_back(&h_dec);
      refs.push_back(&hs);
      init_uniform<double>(refs, seed + 200);
      Vec<double> w(d_h);
      auto wrng = make_rng(seed, 97);
      for (int i = 0; i < d_h; ++i) w(i) = next_uniform(wrng, -1.0, 1.0);

      auto loss = [&](bool with_grad) {
        AttentionCache<double> cache;
        Vec<double> out = ngram_attention<double>(params, h_dec.value.col(0),
                                                  hs.value,
                                                  with_grad ? &cache : nullptr);
        if (with_grad) {
          Vec<double> dh_dec = Vec<double>::Zero(d_h);
          Mat<double> dhs = Mat<double>::Zero(d_h, n_tok);
          ngram_attention_backward<double>(params, cache, w, dh_dec, dhs);
          h_dec.grad.col(0) += dh_dec;
          hs.grad += dhs;
        }
        return w.dot(out);
      };
      track_max(acc, grad_check(refs, loss, eps));
    }
    results.push_back(acc);
  }

  // --- Entity scoring (dot products + END, softmax, cross-entropy) ------
  {
    BlockCheckResult acc{"entity_scoring", {}};
    for (int seed = 1; seed <= n_seeds; ++seed) {
      const int n_cand = 2 + (seed % 2);
      ParamTensor<double> embs{"cand_embs", {}, {}}, h{"h_att", {}, {}},
          end{"end_entity", {}, {}};
      embs.resize(d_h, n_cand);
      h.resize(d_h, 1);
      end.resize(d_h, 1);
      ParamRefs<double> refs{&embs, &h, &end};
      init_uniform<double>(refs, seed + 300);
      const int target = seed % (n_cand + 1);

      auto loss = [&](bool with_grad) {
        Vec<double> scores(n_cand + 1);
        scores.head(n_cand) = embs.value.transpose() * h.value.col(0);
        scores(n_cand) = end.value.col(0).dot(h.value.col(0));
        Vec<double> p = softmax<double>(scores);
        if (with_grad) {
          Vec<double> ds = softmax_xent_backward<double>(p, target, 1.0);
          h.grad.col(0) += embs.value * ds.head(n_cand);
          embs.grad += h.value.col(0) * ds.head(n_cand).transpose();
          h.grad.col(0) += end.value.col(0) * ds(n_cand);
          end.grad.col(0) += h.value.col(0) * ds(n_cand);
        }
        return cross_entropy<double>(p, target);
      };
      track_max(acc, grad_check(refs, loss, eps));
    }
    results.push_back(acc);
  }

  // --- Relation head -----------------------------------------------------
  {
    BlockCheckResult acc{"relation_head", {}};
    for (int seed = 1; seed <= n_seeds; ++seed) {
      const int n_rel = 3;
      ParamTensor<double> wr{"rel_w", {}, {}}, br{"rel_b", {}, {}},
          h{"h_att", {}, {}};
      wr.resize(n_rel, d_h);
      br.resize(n_rel, 1);
      h.resize(d_h, 1);
      ParamRefs<double> refs{&wr, &br, &h};
      init_uniform<double>(refs, seed + 400);
      const int target = seed % n_rel;

      auto loss = [&](bool with_grad) {
        Vec<double> scores = wr.value * h.value.col(0) + br.value.col(0);
        Vec<double> p = softmax<double>(scores);
        if (with_grad) {
          Vec<double> ds = softmax_xent_backward<double>(p, target, 1.0);
          wr.grad += ds * h.value.col(0).transpose();
          br.grad.col(0) += ds;
          h.grad.col(0) += wr.value.transpose() * ds;
        }
        return cross_entropy<double>(p, target);
      };
      track_max(acc, grad_check(refs, loss, eps));
    }
    results.push_back(acc);
  }

  // --- Full one-triple sequence loss -------------------------------------
  {
    BlockCheckResult acc{"sequence_loss", {}};
    for (int seed = 1; seed <= n_seeds; ++seed) {
      ModelConfig cfg;
      cfg.embed_dim = d_e;
      cfg.hidden_dim = d_h;
      cfg.ngram_max = 2;
      const int vocab = 9;
      ModelParams<double> params;
      params.init_random(cfg, vocab, /*relations=*/3, seed + 500);

      EncodedExample ex;
      ex.id = "gc";
      ex.sentence_ids = {3, 4, 5, 6};
      // Varied lengths exercise the batched-encoder masking.
      ex.cand_texts = {{3, 1}, {4, 1, 7}, {5, 1, 7, 8}};
      ex.steps = {{true, true, 0},
                  {false, false, static_cast<int>(seed % 3)},
                  {true, false, 2},
                  {true, true, 3}};  // END

      auto refs = params.registry();
      auto loss = [&](bool with_grad) {
        return sequence_loss<double>(params, ex, with_grad);
      };
      track_max(acc, grad_check(refs, loss, eps));
    }
    results.push_back(acc);
  }

  return results;
}

}  // namespace bed
