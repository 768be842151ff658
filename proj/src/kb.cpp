#include "bed/kb.hpp"

#include <fstream>

#include <json.hpp>

#include "bed/errors.hpp"
#include "bed/text.hpp"

namespace bed {

using nlohmann::json;

const Entity* KnowledgeBase::find_entity(const std::string& id) const {
  auto it = entity_pos.find(id);
  return it == entity_pos.end() ? nullptr : &entities[it->second];
}

const Relation* KnowledgeBase::find_relation(const std::string& id) const {
  auto it = relation_pos.find(id);
  return it == relation_pos.end() ? nullptr : &relations[it->second];
}

int KnowledgeBase::relation_index(const std::string& id) const {
  auto it = relation_pos.find(id);
  return it == relation_pos.end() ? -1 : it->second;
}

void KnowledgeBase::add_entity(Entity e) {
  if (entity_pos.count(e.id)) {
    throw DataError("duplicate entity id: " + e.id);
  }
  e.name_tokens = tokenize(e.name);
  e.desc_tokens = tokenize(e.description);
  if (e.name_tokens.empty()) {
    throw DataError("entity " + e.id + " has an empty name");
  }
  entity_pos.emplace(e.id, static_cast<int>(entities.size()));
  entities.push_back(std::move(e));
}

void KnowledgeBase::add_relation(Relation r) {
  if (relation_pos.count(r.id)) {
    throw DataError("duplicate relation id: " + r.id);
  }
  relation_pos.emplace(r.id, static_cast<int>(relations.size()));
  relations.push_back(std::move(r));
}

namespace {

std::string get_string_field(const json& j, const char* key,
                             const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw DataError(where + ": missing string field \"" + key + "\"");
  }
  return j[key].get<std::string>();
}

template <class Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    fn(j, path + " line " + std::to_string(line_no));
  }
}

}  // namespace

KnowledgeBase load_kb(const std::string& entities_path,
                      const std::string& relations_path) {
  KnowledgeBase kb;
  for_each_jsonl(entities_path, [&](const json& j, const std::string& where) {
    Entity e;
    e.id = get_string_field(j, "id", where);
    e.name = get_string_field(j, "name", where);
    e.description = get_string_field(j, "description", where);
    try {
      kb.add_entity(std::move(e));
    } catch (const DataError& err) {
      throw DataError(where + ": " + err.what());
    }
  });
  for_each_jsonl(relations_path, [&](const json& j, const std::string& where) {
    Relation r;
    r.id = get_string_field(j, "id", where);
    r.name = get_string_field(j, "name", where);
    try {
      kb.add_relation(std::move(r));
    } catch (const DataError& err) {
      throw DataError(where + ": " + err.what());
    }
  });
  return kb;
}

void save_kb(const KnowledgeBase& kb, const std::string& entities_path,
             const std::string& relations_path) {
  std::ofstream ents(entities_path);
  if (!ents) throw IoError("cannot write " + entities_path);
  for (const auto& e : kb.entities) {
    json j{{"id", e.id}, {"name", e.name}, {"description", e.description}};
    ents << j.dump() << "\n";
  }
  std::ofstream rels(relations_path);
  if (!rels) throw IoError("cannot write " + relations_path);
  for (const auto& r : kb.relations) {
    json j{{"id", r.id}, {"name", r.name}};
    rels << j.dump() << "\n";
  }
}

std::vector<std::string> entity_text(const Entity& e, int max_desc_tokens) {
  std::vector<std::string> out = e.name_tokens;
  out.push_back(kSepToken);
  int take = static_cast<int>(e.desc_tokens.size());
  if (max_desc_tokens >= 0 && take > max_desc_tokens) take = max_desc_tokens;
  out.insert(out.end(), e.desc_tokens.begin(), e.desc_tokens.begin() + take);
  return out;
}

}  // namespace bed
