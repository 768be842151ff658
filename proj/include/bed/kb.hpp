#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace bed {

// Reserved vocabulary tokens. The tokenizer can never emit them from raw
// text ('[' and ']' always get peeled off as punctuation), so they cannot
// collide with natural words.
inline constexpr const char* kSepToken = "[SEP]";
inline constexpr const char* kUnkToken = "[UNK]";
inline constexpr const char* kBosToken = "[BOS]";

struct Entity {
  std::string id;
  std::string name;
  std::string description;
  std::vector<std::string> name_tokens;
  std::vector<std::string> desc_tokens;
};

struct Relation {
  std::string id;
  std::string name;
};

// Immutable after load; safe for unrestricted concurrent reads.
// `entities`/`relations` preserve file order, and the dense relation index
// equals the position in `relations`.
struct KnowledgeBase {
  std::vector<Entity> entities;
  std::vector<Relation> relations;
  std::unordered_map<std::string, int> entity_pos;
  std::unordered_map<std::string, int> relation_pos;  // the dense index in [0, |R|)

  const Entity* find_entity(const std::string& id) const;
  const Relation* find_relation(const std::string& id) const;
  int relation_index(const std::string& id) const;  // -1 if absent

  void add_entity(Entity e);      // throws DataError on duplicate/empty name
  void add_relation(Relation r);  // throws DataError on duplicate
};

/// Load a KB from two JSONL files: entities {"id","name","description"} and
/// relations {"id","name"}. Duplicate ids, empty names and malformed lines
/// are reported with the offending file/line.
KnowledgeBase load_kb(const std::string& entities_path,
                      const std::string& relations_path);

void save_kb(const KnowledgeBase& kb, const std::string& entities_path,
             const std::string& relations_path);

/// Encoder input for an entity: name tokens, the [SEP] token, then up to
/// `max_desc_tokens` description tokens. The separator is emitted even for
/// an empty description so the input format stays uniform.
std::vector<std::string> entity_text(const Entity& e, int max_desc_tokens = 32);

}  // namespace bed
