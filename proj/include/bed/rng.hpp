#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bed/nn.hpp"
#include "bed/types.hpp"

namespace bed {

// All randomness flows from one run seed; sub-streams get fixed offsets so
// adding a consumer never shifts another one.
inline std::mt19937_64 make_rng(uint64_t seed, uint64_t stream = 0) {
  return std::mt19937_64(seed * 0x9E3779B97F4A7C15ull + stream);
}

// [0, 1) from the top 53 bits; identical across platforms, unlike
// std::uniform_real_distribution.
inline double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double next_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * next_unit(rng);
}

// Unbiased-enough modulo draw for small n; deterministic everywhere.
inline size_t next_index(std::mt19937_64& rng, size_t n) {
  return static_cast<size_t>(rng() % n);
}

// Fisher-Yates with the portable draws above (std::shuffle is
// implementation-defined).
template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[next_index(rng, i)]);
  }
}

inline constexpr double kInitRange = 0.08;

// Uniform [-0.08, 0.08] over all tensors, filled in registry order.
template <class S>
void init_uniform(ParamRefs<S> params, uint64_t seed) {
  auto rng = make_rng(seed, /*stream=*/1);
  for (ParamTensor<S>* p : params) {
    S* data = p->value.data();
    for (long i = 0; i < p->size(); ++i) {
      data[i] = static_cast<S>(next_uniform(rng, -kInitRange, kInitRange));
    }
  }
}

}  // namespace bed
