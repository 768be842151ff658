#include "bed/synth.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "bed/errors.hpp"
#include "bed/rng.hpp"

namespace bed {

GeneratorConfig GeneratorConfig::defaults() {
  GeneratorConfig cfg;
  cfg.person_first = {
      "Alira",  "Brenn",   "Caldo",  "Darya",  "Elwin",  "Fenra",  "Garren",
      "Halix",  "Imara",   "Joral",  "Kessa",  "Lumen",  "Marek",  "Nerys",
      "Olwen",  "Pavek",   "Quilla", "Rostam", "Selby",  "Tirian", "Ulla",
      "Varek",  "Wrenna",  "Xanthe", "Yorvin", "Zaida",  "Ansel",  "Beryl",
      "Corvin", "Delphi",  "Evander", "Fiora", "Gideon", "Hesper", "Ilsa",
      "Jasper", "Keturah", "Lazlo",  "Mirela", "Nolan",  "Ondine", "Perrin",
      "Quenby", "Rhea",    "Soren",  "Talia",  "Umber",  "Vespera"};
  cfg.person_last = {
      "Aldercott", "Bravik",   "Calloway", "Dunmore",  "Ellsworth",
      "Farrow",    "Grimsby",  "Hollis",   "Ingelmo",  "Jarnvik",
      "Kestrel",   "Lockridge", "Mansell",  "Norcross", "Ostrander",
      "Pellham",   "Quintrell", "Ravenscar", "Selwyn",  "Thorneld",
      "Umbra",     "Vantross",  "Westerby", "Yarrow",   "Zelenko",
      "Ashgrove",  "Birkfield", "Coldstream", "Dagmar",  "Eastmere",
      "Fennick",   "Galloway",  "Harkness", "Ironwood", "Jessop",
      "Kirkwall",  "Larkspur",  "Moorcroft", "Nightgale", "Oakhurst",
      "Pemberton", "Quarry",    "Redfern",  "Stroud",   "Tarleton",
      "Underhill", "Veckersley", "Whitlock"};
  cfg.place_stems = {
      "Tilmare",  "Vexford",  "Ardenholm", "Brindlemoor", "Cresthaven",
      "Dunwick",  "Eastvale", "Fernbrook", "Glastonbury", "Hartswell",
      "Ivermoor", "Jutland",  "Kelsford",  "Lornmouth",   "Mistfall",
      "Northgate", "Oxcombe", "Pinemarsh", "Quarrytown",  "Rivenholt",
      "Saltmere", "Thornfield", "Uplandale", "Vaylmont",  "Westmoor",
      "Yarrowdale", "Zephyr",  "Ashby",     "Blackmere",  "Coppervale",
      "Drumlin",  "Elmsworth", "Foxhollow", "Greywater",  "Hollowbrook",
      "Ironbridge"};
  cfg.place_suffixes = {"Heights", "Hollow", "Harbor", "Crossing",
                        "Falls",   "Ridge",  "Downs",  "Reach"};
  cfg.org_stems = {
      "Veldar",   "Ashline",  "Corvalent", "Dravik",    "Emberton",
      "Falconer", "Gildhart", "Halcyon",   "Ironquill", "Jorvik",
      "Kettleworth", "Lumenor", "Morrowind", "Northstar", "Ostander",
      "Pinnacle", "Quellmark", "Ravenmark", "Silvane",   "Tormund",
      "Umberline", "Vantage",  "Westwind",  "Yieldstone"};
  cfg.org_suffixes = {"Industries", "Laboratories", "Consortium", "Holdings",
                      "Logistics",  "Foundry",      "Collective", "Works"};
  cfg.professions = {"sculptor",  "navigator", "archivist", "botanist",
                     "engineer",  "cartographer", "chemist", "historian"};
  cfg.regions = {"amber",  "boreal", "coastal", "dusken",
                 "eastern", "frostbound", "greenbelt", "highland"};
  cfg.relation_schemas = {
      {"place of birth",
       'P',
       'L',
       {"{SUBJ} was born in {OBJ} .", "{SUBJ} is a native of {OBJ} ."}},
      {"employer",
       'P',
       'O',
       {"{SUBJ} works for {OBJ} .", "{SUBJ} is employed by {OBJ} ."}},
      {"headquarters location",
       'O',
       'L',
       {"{SUBJ} is headquartered in {OBJ} .",
        "{SUBJ} keeps its main office in {OBJ} ."}},
      {"spouse", 'P', 'P', {"{SUBJ} is married to {OBJ} ."}},
      {"located in",
       'L',
       'L',
       {"{SUBJ} lies within {OBJ} .", "{SUBJ} is located in {OBJ} ."}},
      {"founded by", 'O', 'P', {"{SUBJ} was founded by {OBJ} ."}},
  };
  return cfg;
}

namespace {

char entity_type_for(int i) {
  // 40% person, 30% place, 30% org, interleaved.
  const int m = i % 10;
  if (m < 4) return 'P';
  if (m < 7) return 'L';
  return 'O';
}

std::string pick(const std::vector<std::string>& pool, std::mt19937_64& rng) {
  if (pool.empty()) throw DataError("generator: empty token pool");
  return pool[next_index(rng, pool.size())];
}

std::string unique_name(char type, const GeneratorConfig& cfg,
                        std::mt19937_64& rng,
                        std::set<std::string>& used) {
  for (int attempt = 0; attempt < 2000; ++attempt) {
    std::string name;
    switch (type) {
      case 'P':
        name = pick(cfg.person_first, rng) + " " + pick(cfg.person_last, rng);
        break;
      case 'L':
        name = pick(cfg.place_stems, rng);
        if (next_unit(rng) < 0.5) name += " " + pick(cfg.place_suffixes, rng);
        break;
      default:
        name = pick(cfg.org_stems, rng) + " " + pick(cfg.org_suffixes, rng);
        break;
    }
    if (used.insert(name).second) return name;
  }
  throw DataError("generator: name pool too small for unique entity names");
}

std::string describe(char type, const GeneratorConfig& cfg,
                     std::mt19937_64& rng) {
  switch (type) {
    case 'P':
      if (next_unit(rng) < 0.5) {
        return "a person from " + pick(cfg.place_stems, rng);
      }
      return "a " + pick(cfg.professions, rng) + " from " +
             pick(cfg.place_stems, rng);
    case 'L':
      return std::string(next_unit(rng) < 0.5 ? "a city" : "a town") +
             " in the " + pick(cfg.regions, rng) + " region";
    default:
      return std::string(next_unit(rng) < 0.5 ? "a company" : "a firm") +
             " based in " + pick(cfg.place_stems, rng);
  }
}

RelationSchema schema_for(int k, const GeneratorConfig& cfg) {
  const auto& base = cfg.relation_schemas;
  if (k < static_cast<int>(base.size())) return base[k];
  // Beyond the built-in schemas: generic person-to-person relations with a
  // numbered verb phrase so each one stays lexically distinct.
  RelationSchema extra;
  extra.name = "relation " + std::to_string(k);
  extra.subj_type = 'P';
  extra.obj_type = 'P';
  extra.templates = {"{SUBJ} is connected to {OBJ} through line-" +
                     std::to_string(k) + " ."};
  return extra;
}

std::string instantiate(const std::string& tmpl, const std::string& subj,
                        const std::string& obj) {
  std::string out = tmpl;
  auto replace = [&out](const std::string& slot, const std::string& value) {
    size_t pos = out.find(slot);
    if (pos == std::string::npos) {
      throw DataError("generator: template missing slot " + slot);
    }
    out.replace(pos, slot.size(), value);
  };
  replace("{SUBJ}", subj);
  replace("{OBJ}", obj);
  return out;
}

std::string apply_dropout(const std::string& text, double p,
                          std::mt19937_64& rng) {
  std::istringstream in(text);
  std::vector<std::string> toks;
  std::string tok;
  while (in >> tok) toks.push_back(tok);
  std::vector<std::string> kept;
  for (const auto& t : toks) {
    if (next_unit(rng) >= p) kept.push_back(t);
  }
  if (kept.empty()) kept.push_back(toks.front());  // never emit empty text
  std::string out;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (i) out += " ";
    out += kept[i];
  }
  return out;
}

}  // namespace

KnowledgeBase generate_kb(const GeneratorConfig& cfg) {
  if (cfg.n_entities < 2 || cfg.n_relations < 1) {
    throw DataError("generator: need at least 2 entities and 1 relation");
  }
  auto rng = make_rng(cfg.seed, /*stream=*/10);
  KnowledgeBase kb;
  std::set<std::string> used;
  for (int i = 0; i < cfg.n_entities; ++i) {
    const char type = entity_type_for(i);
    Entity e;
    e.id = "E" + std::to_string(i);
    e.name = unique_name(type, cfg, rng, used);
    e.description = describe(type, cfg, rng);
    kb.add_entity(std::move(e));
  }
  for (int k = 0; k < cfg.n_relations; ++k) {
    kb.add_relation({"R" + std::to_string(k), schema_for(k, cfg).name});
  }
  return kb;
}

std::vector<DatasetExample> Corpus::all() const {
  std::vector<DatasetExample> out = train;
  out.insert(out.end(), dev.begin(), dev.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

Corpus generate_corpus(const KnowledgeBase& kb, const GeneratorConfig& cfg) {
  auto rng = make_rng(cfg.seed, /*stream=*/11);

  std::vector<std::vector<int>> by_type(3);  // P, L, O
  auto type_slot = [](char t) { return t == 'P' ? 0 : t == 'L' ? 1 : 2; };
  for (size_t i = 0; i < kb.entities.size(); ++i) {
    by_type[type_slot(entity_type_for(static_cast<int>(i)))].push_back(
        static_cast<int>(i));
  }

  std::vector<RelationSchema> schemas;
  for (size_t k = 0; k < kb.relations.size(); ++k) {
    schemas.push_back(schema_for(static_cast<int>(k), cfg));
  }

  auto draw_pair = [&](const RelationSchema& schema) {
    const auto& subj_pool = by_type[type_slot(schema.subj_type)];
    const auto& obj_pool = by_type[type_slot(schema.obj_type)];
    if (subj_pool.empty() || obj_pool.empty() ||
        (schema.subj_type == schema.obj_type && subj_pool.size() < 2)) {
      throw DataError("generator: not enough entities of the required types");
    }
    int subj = subj_pool[next_index(rng, subj_pool.size())];
    int obj = obj_pool[next_index(rng, obj_pool.size())];
    while (obj == subj) obj = obj_pool[next_index(rng, obj_pool.size())];
    return std::pair<int, int>{subj, obj};
  };

  std::vector<DatasetExample> sentences;
  for (int s = 0; s < cfg.n_sentences; ++s) {
    DatasetExample ex;
    ex.id = "S" + std::to_string(s);
    const int n_triples = next_unit(rng) < cfg.second_triple_prob ? 2 : 1;
    for (int j = 0; j < n_triples; ++j) {
      const int r = static_cast<int>(next_index(rng, schemas.size()));
      const auto& schema = schemas[r];
      auto [subj, obj] = draw_pair(schema);
      const std::string& tmpl =
          schema.templates[next_index(rng, schema.templates.size())];
      std::string text = instantiate(tmpl, kb.entities[subj].name,
                                     kb.entities[obj].name);
      if (j) ex.text += " ";
      ex.text += text;
      Triple triple{kb.entities[subj].id, kb.relations[r].id,
                    kb.entities[obj].id};
      if (std::find(ex.triples.begin(), ex.triples.end(), triple) ==
          ex.triples.end()) {
        ex.triples.push_back(triple);
      }
    }
    if (cfg.token_dropout > 0.0) {
      ex.text = apply_dropout(ex.text, cfg.token_dropout, rng);
    }
    sentences.push_back(std::move(ex));
  }

  std::vector<size_t> order(sentences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  const size_t n = sentences.size();
  const size_t n_train = n * 8 / 10;
  const size_t n_dev = n / 10;
  Corpus corpus;
  for (size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train          ? corpus.train
                : i < n_train + n_dev ? corpus.dev
                                      : corpus.test;
    dst.push_back(sentences[order[i]]);
  }
  return corpus;
}

}  // namespace bed
