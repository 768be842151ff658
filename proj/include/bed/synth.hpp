#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bed/io.hpp"
#include "bed/kb.hpp"
#include "bed/types.hpp"

namespace bed {

// Typed relation: subject/object entity types plus the sentence templates
// that express it ({SUBJ}/{OBJ} slots).
struct RelationSchema {
  std::string name;
  char subj_type;  // 'P' person, 'L' place, 'O' org
  char obj_type;
  std::vector<std::string> templates;
};

// Deterministic distant-supervision-style generator: a typed KB whose entity
// names are compositional draws from token pools, and a corpus whose
// sentences instantiate relation templates with names substituted verbatim.
struct GeneratorConfig {
  uint64_t seed = 7;
  int n_entities = 300;
  int n_relations = 6;
  int n_sentences = 1000;
  double token_dropout = 0.0;     // per-token drop probability in sentences
  double second_triple_prob = 0.3;
  double novel_fraction = 0.2;    // default holdout for the novel-entity run

  std::vector<std::string> person_first, person_last;
  std::vector<std::string> place_stems, place_suffixes;
  std::vector<std::string> org_stems, org_suffixes;
  std::vector<std::string> professions, regions;
  std::vector<RelationSchema> relation_schemas;

  static GeneratorConfig defaults();
};

KnowledgeBase generate_kb(const GeneratorConfig& cfg);

struct Corpus {
  std::vector<DatasetExample> train, dev, test;

  std::vector<DatasetExample> all() const;
};

// 80/10/10 split by seeded shuffle; sentence ids are assigned in generation
// order and stay stable across splits.
Corpus generate_corpus(const KnowledgeBase& kb, const GeneratorConfig& cfg);

}  // namespace bed
