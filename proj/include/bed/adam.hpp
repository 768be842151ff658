#pragma once

#include <cmath>
#include <vector>

#include "bed/nn.hpp"
#include "bed/types.hpp"

namespace bed {

// Adam with bias correction. `step` consumes the accumulated gradients and
// zeroes them; call order over parameters is the registry order, so two runs
// with the same seed update bit-identically.
template <class S>
struct AdamState {
  S lr = S(1e-3);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  long t = 0;
  std::vector<Mat<S>> m, v;

  void reset(const ParamRefs<S>& params) {
    t = 0;
    m.clear();
    v.clear();
    for (const ParamTensor<S>* p : params) {
      m.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step(ParamRefs<S>& params) {
    ++t;
    const S c1 = S(1) - static_cast<S>(std::pow(beta1, t));
    const S c2 = S(1) - static_cast<S>(std::pow(beta2, t));
    for (size_t i = 0; i < params.size(); ++i) {
      Mat<S>& g = params[i]->grad;
      m[i] = beta1 * m[i] + (S(1) - beta1) * g;
      v[i] = (beta2 * v[i].array() + (S(1) - beta2) * g.array().square())
                 .matrix();
      params[i]->value.array() -=
          lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
      g.setZero();
    }
  }
};

template <class S>
S grad_norm(const ParamRefs<S>& params) {
  S sq = S(0);
  for (const ParamTensor<S>* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

// Global-norm clipping; no-op when the norm is under the limit.
template <class S>
S clip_gradients(ParamRefs<S>& params, S max_norm) {
  S norm = grad_norm<S>(params);
  if (norm > max_norm && norm > S(0)) {
    S scale = max_norm / norm;
    for (ParamTensor<S>* p : params) p->grad *= scale;
  }
  return norm;
}

}  // namespace bed
