#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bed/model.hpp"
#include "bed/types.hpp"
#include "bed/vocab.hpp"

namespace bed {

// Versioned binary checkpoint:
//   magic "BEDCKPT1"
//   u32 config-JSON length, UTF-8 bytes
//   u32 vocab-JSON length, UTF-8 bytes
//   u32 tensor count, then per tensor:
//     u32 name length, name bytes, u32 rank, u32 dims[rank],
//     row-major little-endian float32 data
// Bad magic, truncation and dimension mismatches are distinct errors.
inline constexpr const char* kCheckpointMagic = "BEDCKPT1";

struct NamedTensor {
  std::string name;
  MatF data;
};

struct RawCheckpoint {
  nlohmann::json config;
  nlohmann::json vocab;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
};

void write_checkpoint(const std::string& path, const RawCheckpoint& ckpt);
RawCheckpoint read_checkpoint(const std::string& path);

// Model-level glue. Parameters are stored as float32 regardless of the
// in-memory scalar; float round-trips are bitwise exact.
template <class S>
void save_checkpoint(const std::string& path, const ModelParams<S>& params,
                     const Vocabulary& vocab, nlohmann::json config) {
  config["embed_dim"] = params.cfg.embed_dim;
  config["hidden_dim"] = params.cfg.hidden_dim;
  config["ngram_max"] = params.cfg.ngram_max;
  config["max_desc_tokens"] = params.cfg.max_desc_tokens;
  RawCheckpoint ckpt;
  ckpt.config = std::move(config);
  ckpt.vocab = vocab.to_json();
  for (const ParamTensor<S>* p : params.registry()) {
    ckpt.tensors.push_back({p->name, p->value.template cast<float>()});
  }
  write_checkpoint(path, ckpt);
}

template <class S>
std::pair<ModelParams<S>, Vocabulary> load_model(const RawCheckpoint& ckpt,
                                                 int n_relations) {
  ModelConfig cfg;
  cfg.embed_dim = ckpt.config.at("embed_dim").get<int>();
  cfg.hidden_dim = ckpt.config.at("hidden_dim").get<int>();
  cfg.ngram_max = ckpt.config.at("ngram_max").get<int>();
  cfg.max_desc_tokens = ckpt.config.at("max_desc_tokens").get<int>();
  Vocabulary vocab = Vocabulary::from_json(ckpt.vocab);

  ModelParams<S> params;
  params.allocate(cfg, vocab.size(), n_relations);
  for (ParamTensor<S>* p : params.registry()) {
    const NamedTensor* t = ckpt.find(p->name);
    if (!t) throw DataError("checkpoint: missing tensor " + p->name);
    if (t->data.rows() != p->value.rows() ||
        t->data.cols() != p->value.cols()) {
      throw DataError("checkpoint: dimension mismatch for tensor " + p->name);
    }
    p->value = t->data.template cast<S>();
  }
  return {std::move(params), std::move(vocab)};
}

}  // namespace bed
