#pragma once

#include <string>
#include <vector>

#include "bed/types.hpp"

namespace bed {

// A named parameter with its gradient accumulator. Backward passes add into
// `grad`; the optimizer consumes and clears it.
template <class S>
struct ParamTensor {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
  long size() const { return static_cast<long>(value.size()); }
};

template <class S>
using ParamRefs = std::vector<ParamTensor<S>*>;

template <class S>
Vec<S> sigmoid(const Vec<S>& x) {
  return ((-x.array()).exp() + S(1)).inverse().matrix();
}

// ---------------------------------------------------------------------------
// GRU cell:  z = s(Wz x + Uz h + bz)
//            r = s(Wr x + Ur h + br)
//            g = tanh(Wh x + Uh (r . h) + bh)
//            h' = (1 - z) . h + z . g
// ---------------------------------------------------------------------------

template <class S>
struct GruParams {
  ParamTensor<S> wz, uz, wr, ur, wh, uh;  // d_h x d_in / d_h x d_h
  ParamTensor<S> bz, br, bh;              // d_h x 1

  void init(const std::string& prefix, int d_in, int d_h) {
    wz.name = prefix + ".wz";
    uz.name = prefix + ".uz";
    wr.name = prefix + ".wr";
    ur.name = prefix + ".ur";
    wh.name = prefix + ".wh";
    uh.name = prefix + ".uh";
    bz.name = prefix + ".bz";
    br.name = prefix + ".br";
    bh.name = prefix + ".bh";
    wz.resize(d_h, d_in);
    uz.resize(d_h, d_h);
    wr.resize(d_h, d_in);
    ur.resize(d_h, d_h);
    wh.resize(d_h, d_in);
    uh.resize(d_h, d_h);
    bz.resize(d_h, 1);
    br.resize(d_h, 1);
    bh.resize(d_h, 1);
  }
  void collect(ParamRefs<S>& out) {
    for (auto* p : {&wz, &uz, &wr, &ur, &wh, &uh, &bz, &br, &bh}) {
      out.push_back(p);
    }
  }
  int hidden_dim() const { return static_cast<int>(wz.value.rows()); }
  int input_dim() const { return static_cast<int>(wz.value.cols()); }
};

template <class S>
struct GruCellCache {
  Vec<S> x, h_prev, z, r, g, h;
};

template <class S>
Vec<S> gru_cell(const GruParams<S>& p, const Vec<S>& x, const Vec<S>& h_prev,
                GruCellCache<S>* cache = nullptr) {
  if (x.rows() != p.wz.value.cols() || h_prev.rows() != p.uz.value.cols()) {
    throw DataError("gru_cell: shape mismatch");
  }
  Vec<S> z = sigmoid<S>(p.wz.value * x + p.uz.value * h_prev + p.bz.value);
  Vec<S> r = sigmoid<S>(p.wr.value * x + p.ur.value * h_prev + p.br.value);
  Vec<S> g =
      (p.wh.value * x + p.uh.value * (r.array() * h_prev.array()).matrix() +
       p.bh.value)
          .array()
          .tanh()
          .matrix();
  Vec<S> h =
      ((S(1) - z.array()) * h_prev.array() + z.array() * g.array()).matrix();
  if (cache) *cache = {x, h_prev, z, r, g, h};
  return h;
}

// Adds parameter gradients into p.*.grad and input gradients into dx/dh_prev.
template <class S>
void gru_cell_backward(GruParams<S>& p, const GruCellCache<S>& c,
                       const Vec<S>& dh, Vec<S>& dx, Vec<S>& dh_prev) {
  Vec<S> dz = (dh.array() * (c.g - c.h_prev).array()).matrix();
  Vec<S> dg = (dh.array() * c.z.array()).matrix();
  dh_prev += (dh.array() * (S(1) - c.z.array())).matrix();

  Vec<S> da_h = (dg.array() * (S(1) - c.g.array().square())).matrix();
  p.wh.grad.noalias() += da_h * c.x.transpose();
  p.uh.grad.noalias() +=
      da_h * (c.r.array() * c.h_prev.array()).matrix().transpose();
  p.bh.grad += da_h;
  Vec<S> drh = p.uh.value.transpose() * da_h;
  Vec<S> dr = (drh.array() * c.h_prev.array()).matrix();
  dh_prev += (drh.array() * c.r.array()).matrix();

  Vec<S> da_r = (dr.array() * c.r.array() * (S(1) - c.r.array())).matrix();
  p.wr.grad.noalias() += da_r * c.x.transpose();
  p.ur.grad.noalias() += da_r * c.h_prev.transpose();
  p.br.grad += da_r;
  dh_prev.noalias() += p.ur.value.transpose() * da_r;

  Vec<S> da_z = (dz.array() * c.z.array() * (S(1) - c.z.array())).matrix();
  p.wz.grad.noalias() += da_z * c.x.transpose();
  p.uz.grad.noalias() += da_z * c.h_prev.transpose();
  p.bz.grad += da_z;
  dh_prev.noalias() += p.uz.value.transpose() * da_z;

  dx.noalias() += p.wz.value.transpose() * da_z;
  dx.noalias() += p.wr.value.transpose() * da_r;
  dx.noalias() += p.wh.value.transpose() * da_h;
}

template <class S>
struct GruSeqCache {
  std::vector<GruCellCache<S>> steps;
};

// seq columns are time steps (d_in x T) -> hidden states (d_h x T).
// h0 defaults to zero at the call sites.
template <class S>
Mat<S> run_gru(const GruParams<S>& p, const Mat<S>& seq, const Vec<S>& h0,
               GruSeqCache<S>* cache = nullptr) {
  const Eigen::Index T = seq.cols();
  if (T < 1) throw DataError("run_gru: empty sequence");
  Mat<S> hs(p.hidden_dim(), T);
  if (cache) cache->steps.resize(T);
  Vec<S> h = h0;
  for (Eigen::Index t = 0; t < T; ++t) {
    h = gru_cell<S>(p, seq.col(t), h, cache ? &cache->steps[t] : nullptr);
    hs.col(t) = h;
  }
  return hs;
}

template <class S>
void run_gru_backward(GruParams<S>& p, const GruSeqCache<S>& cache,
                      const Mat<S>& dhs, Mat<S>& dseq, Vec<S>& dh0) {
  const Eigen::Index T = dhs.cols();
  Vec<S> dh = Vec<S>::Zero(dhs.rows());
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    dh += dhs.col(t);
    Vec<S> dx = Vec<S>::Zero(dseq.rows());
    Vec<S> dh_prev = Vec<S>::Zero(dhs.rows());
    gru_cell_backward<S>(p, cache.steps[t], dh, dx, dh_prev);
    dseq.col(t) += dx;
    dh = dh_prev;
  }
  dh0 += dh;
}

// ---------------------------------------------------------------------------
// Batched GRU over padded variable-length sequences (columns = sequences).
// Finished columns carry their last hidden state through unchanged.
// ---------------------------------------------------------------------------

template <class S>
struct GruBatchStep {
  Mat<S> x, h_prev, z, r, g;
  Eigen::Array<S, 1, Eigen::Dynamic> active;  // 1 while t < length
};

template <class S>
struct GruBatchCache {
  std::vector<GruBatchStep<S>> steps;
  std::vector<int> lengths;
};

// xs[t] is the d_in x B input at step t (zero columns once a sequence has
// ended). Returns the final hidden states (d_h x B).
template <class S>
Mat<S> run_gru_batch(const GruParams<S>& p, const std::vector<Mat<S>>& xs,
                     const std::vector<int>& lengths,
                     GruBatchCache<S>* cache = nullptr) {
  const int B = static_cast<int>(lengths.size());
  const int d_h = p.hidden_dim();
  const Eigen::Index T = static_cast<Eigen::Index>(xs.size());
  Mat<S> h = Mat<S>::Zero(d_h, B);
  if (cache) {
    cache->steps.resize(T);
    cache->lengths = lengths;
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::Array<S, 1, Eigen::Dynamic> act(1, B);
    for (int i = 0; i < B; ++i) act(i) = t < lengths[i] ? S(1) : S(0);
    Mat<S> az =
        (p.wz.value * xs[t] + p.uz.value * h).colwise() + p.bz.value.col(0);
    Mat<S> ar =
        (p.wr.value * xs[t] + p.ur.value * h).colwise() + p.br.value.col(0);
    Mat<S> z = ((-az.array()).exp() + S(1)).inverse().matrix();
    Mat<S> r = ((-ar.array()).exp() + S(1)).inverse().matrix();
    Mat<S> ah =
        (p.wh.value * xs[t] + p.uh.value * (r.array() * h.array()).matrix())
            .colwise() +
        p.bh.value.col(0);
    Mat<S> g = ah.array().tanh().matrix();
    Mat<S> h_new =
        ((S(1) - z.array()) * h.array() + z.array() * g.array()).matrix();
    if (cache) cache->steps[t] = {xs[t], h, z, r, g, act};
    h = ((h_new.array().rowwise() * act) +
         (h.array().rowwise() * (S(1) - act)))
            .matrix();
  }
  return h;
}

// dh_steps[t] may be empty (no direct gradient at that step); dh_final is the
// gradient on the returned final states. dxs must be pre-sized like xs.
template <class S>
void run_gru_batch_backward(GruParams<S>& p, const GruBatchCache<S>& cache,
                            const std::vector<Mat<S>>& dh_steps,
                            const Mat<S>& dh_final, std::vector<Mat<S>>& dxs) {
  const Eigen::Index T = static_cast<Eigen::Index>(cache.steps.size());
  Mat<S> dh = dh_final;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const auto& c = cache.steps[t];
    if (t < static_cast<Eigen::Index>(dh_steps.size()) &&
        dh_steps[t].size() > 0) {
      dh += dh_steps[t];
    }
    const auto& act = c.active;
    // Gradient flows through the cell only for active columns; finished
    // columns pass dh straight to the previous step.
    Mat<S> dha = (dh.array().rowwise() * act).matrix();
    Mat<S> dh_prev = (dh.array().rowwise() * (S(1) - act)).matrix();

    Mat<S> dz = (dha.array() * (c.g - c.h_prev).array()).matrix();
    Mat<S> dg = (dha.array() * c.z.array()).matrix();
    dh_prev.array() += dha.array() * (S(1) - c.z.array());

    Mat<S> da_h = (dg.array() * (S(1) - c.g.array().square())).matrix();
    p.wh.grad.noalias() += da_h * c.x.transpose();
    p.uh.grad.noalias() +=
        da_h * (c.r.array() * c.h_prev.array()).matrix().transpose();
    p.bh.grad.col(0) += da_h.rowwise().sum();
    Mat<S> drh = p.uh.value.transpose() * da_h;
    Mat<S> dr = (drh.array() * c.h_prev.array()).matrix();
    dh_prev.array() += drh.array() * c.r.array();

    Mat<S> da_r = (dr.array() * c.r.array() * (S(1) - c.r.array())).matrix();
    p.wr.grad.noalias() += da_r * c.x.transpose();
    p.ur.grad.noalias() += da_r * c.h_prev.transpose();
    p.br.grad.col(0) += da_r.rowwise().sum();
    dh_prev.noalias() += p.ur.value.transpose() * da_r;

    Mat<S> da_z = (dz.array() * c.z.array() * (S(1) - c.z.array())).matrix();
    p.wz.grad.noalias() += da_z * c.x.transpose();
    p.uz.grad.noalias() += da_z * c.h_prev.transpose();
    p.bz.grad.col(0) += da_z.rowwise().sum();
    dh_prev.noalias() += p.uz.value.transpose() * da_z;

    dxs[t].noalias() += p.wz.value.transpose() * da_z;
    dxs[t].noalias() += p.wr.value.transpose() * da_r;
    dxs[t].noalias() += p.wh.value.transpose() * da_h;
    dh = dh_prev;
  }
}

// ---------------------------------------------------------------------------
// Pooling, softmax, cross-entropy
// ---------------------------------------------------------------------------

// Per-feature mean over time steps (columns).
template <class S>
Vec<S> mean_pool(const Mat<S>& hs) {
  if (hs.cols() < 1) throw DataError("mean_pool: empty input");
  return hs.rowwise().mean();
}

// Max-shifted softmax; invariant to additive shifts of the input.
template <class S>
Vec<S> softmax(const Vec<S>& scores) {
  if (scores.rows() < 1) throw DataError("softmax: empty input");
  Vec<S> e = (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

// ds for given dp, with p = softmax(s).
template <class S>
Vec<S> softmax_backward(const Vec<S>& p, const Vec<S>& dp) {
  S dot = p.dot(dp);
  return (p.array() * (dp.array() - dot)).matrix();
}

inline constexpr double kProbFloor = 1e-12;

template <class S>
S cross_entropy(const Vec<S>& p, int target) {
  if (target < 0 || target >= p.rows()) {
    throw DataError("cross_entropy: target index out of range");
  }
  S prob = p(target);
  if (prob < S(kProbFloor)) prob = S(kProbFloor);
  return -std::log(prob);
}

// Gradient of cross_entropy(softmax(s), target) w.r.t. the scores s.
template <class S>
Vec<S> softmax_xent_backward(const Vec<S>& p, int target, S scale) {
  Vec<S> ds = p * scale;
  ds(target) -= scale;
  return ds;
}

}  // namespace bed
