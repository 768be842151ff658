#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "bed/bm25.hpp"
#include "bed/kb.hpp"
#include "bed/model.hpp"
#include "bed/types.hpp"
#include "bed/vocab.hpp"

namespace bed {

// Candidate universe after registering entities that were unknown at
// training time: a merged KB, a rebuilt BM25 index, and encoder embeddings
// for every entity. Building this must not change a single parameter byte —
// the checksums witness it.
template <class S>
struct NovelRegistration {
  KnowledgeBase universe;
  Bm25Index index;
  std::unordered_map<std::string, Vec<S>> embeddings;
  uint64_t checksum_before = 0;
  uint64_t checksum_after = 0;
};

template <class S>
NovelRegistration<S> register_novel_entities(const KnowledgeBase& kb,
                                             const std::vector<Entity>& novel,
                                             const ModelParams<S>& params,
                                             const Vocabulary& vocab) {
  NovelRegistration<S> reg;
  reg.checksum_before = params.checksum();
  reg.universe = kb;
  for (const Entity& e : novel) {
    if (kb.find_entity(e.id)) {
      throw DataError("novel entity id collides with the KB: " + e.id);
    }
    reg.universe.add_entity(e);
  }
  reg.index = build_bm25_index(reg.universe);
  for (const Entity& e : reg.universe.entities) {
    reg.embeddings.emplace(
        e.id, encode_entity<S>(params, vocab.encode(entity_text(
                                           e, params.cfg.max_desc_tokens))));
  }
  reg.checksum_after = params.checksum();
  if (reg.checksum_before != reg.checksum_after) {
    throw NumericError("parameters changed while registering novel entities");
  }
  return reg;
}

}  // namespace bed
