#include "bed/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <thread>
#include <unordered_set>

#include "bed/checkpoint.hpp"
#include "bed/decode.hpp"
#include "bed/io.hpp"
#include "bed/novel.hpp"
#include "bed/train.hpp"

namespace bed {

using nlohmann::json;

nlohmann::json PipelineConfig::to_json() const {
  return json{{"kb_entities", kb_entities},
              {"kb_relations", kb_relations},
              {"data", data},
              {"out_dir", out_dir},
              {"checkpoint", checkpoint},
              {"index_path", index_path},
              {"predictions", predictions},
              {"stopwords_path", stopwords_path},
              {"top_k", top_k},
              {"span_strategy", span_strategy},
              {"span_max_len", span_max_len},
              {"bm25_k1", bm25_k1},
              {"bm25_b", bm25_b},
              {"hidden", hidden},
              {"embed", embed},
              {"ngram_max", ngram_max},
              {"max_desc_tokens", max_desc_tokens},
              {"epochs", epochs},
              {"batch", batch},
              {"lr", lr},
              {"clip_norm", clip_norm},
              {"patience", patience},
              {"early_stop_loss", early_stop_loss},
              {"max_triples", max_triples},
              {"holdout_fraction", holdout_fraction},
              {"seed", seed},
              {"threads", threads},
              {"precision", precision}};
}

namespace {

struct SpanSetup {
  std::unordered_set<std::string> stopwords;
  SpanConfig config;
};

SpanSetup make_span_setup(const PipelineConfig& cfg) {
  SpanSetup setup;
  setup.stopwords = cfg.stopwords_path.empty()
                        ? default_stopwords()
                        : load_stopwords(cfg.stopwords_path);
  setup.config.strategy = span_strategy_from_string(cfg.span_strategy);
  setup.config.max_len = cfg.span_max_len;
  setup.config.stopwords = &setup.stopwords;
  return setup;
}

ModelConfig make_model_config(const PipelineConfig& cfg) {
  ModelConfig mc;
  mc.embed_dim = cfg.embed;
  mc.hidden_dim = cfg.hidden;
  mc.ngram_max = cfg.ngram_max;
  mc.max_desc_tokens = cfg.max_desc_tokens;
  return mc;
}

TrainOptions make_train_options(const PipelineConfig& cfg, std::ostream* log) {
  TrainOptions opt;
  opt.epochs = cfg.epochs;
  opt.batch_size = cfg.batch;
  opt.lr = cfg.lr;
  opt.clip_norm = cfg.clip_norm;
  opt.patience = cfg.patience;
  opt.seed = cfg.seed;
  opt.early_stop_loss = cfg.early_stop_loss;
  opt.log = log;
  return opt;
}

Vocabulary build_vocab(const KnowledgeBase& kb,
                       const std::vector<Sentence>& sentences,
                       int max_desc_tokens) {
  Vocabulary vocab;
  for (const Entity& e : kb.entities) {
    vocab.add_all(entity_text(e, max_desc_tokens));
  }
  for (const Sentence& s : sentences) vocab.add_all(s.tokens);
  return vocab;
}

std::vector<Sentence> make_sentences(const std::vector<DatasetExample>& data) {
  std::vector<Sentence> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(make_sentence(ex.id, ex.text));
  return out;
}

std::vector<std::vector<Triple>> gold_of(
    const std::vector<DatasetExample>& data) {
  std::vector<std::vector<Triple>> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(ex.triples);
  return out;
}

json relations_json(const KnowledgeBase& kb) {
  json j = json::array();
  for (const auto& r : kb.relations) j.push_back(r.id);
  return j;
}

void check_relations_match(const KnowledgeBase& kb, const json& ckpt_config) {
  const auto stored = ckpt_config.at("relations").get<std::vector<std::string>>();
  if (stored.size() != kb.relations.size()) {
    throw DataError("checkpoint was trained with a different relation set");
  }
  for (size_t i = 0; i < stored.size(); ++i) {
    if (stored[i] != kb.relations[i].id) {
      throw DataError("checkpoint relation order mismatch at index " +
                      std::to_string(i));
    }
  }
}

// Candidate retrieval + gold augmentation + vocabulary resolution for a
// training corpus.
struct TrainingWorld {
  Bm25Index index;
  std::vector<Sentence> sentences;
  std::vector<CandidateSet> retrieved;   // pre-augmentation
  std::vector<EncodedExample> examples;
  Vocabulary vocab;
  double coverage = 1.0;
};

TrainingWorld prepare_training(const KnowledgeBase& kb,
                               const std::vector<DatasetExample>& data,
                               const PipelineConfig& cfg,
                               const SpanSetup& spans) {
  TrainingWorld world;
  world.index = build_bm25_index(kb, cfg.bm25_k1, cfg.bm25_b);
  world.sentences = make_sentences(data);
  world.retrieved.reserve(data.size());
  for (const Sentence& s : world.sentences) {
    world.retrieved.push_back(
        generate_candidates(s, world.index, cfg.top_k, spans.config));
  }
  world.coverage = candidate_coverage(world.retrieved, gold_of(data));
  world.vocab = build_vocab(kb, world.sentences, cfg.max_desc_tokens);
  for (size_t i = 0; i < data.size(); ++i) {
    CandidateSet augmented =
        augment_candidates(world.retrieved[i], data[i].triples, kb);
    TargetSequence target = linearize_triples(data[i].triples);
    world.examples.push_back(build_encoded_example(
        world.sentences[i], augmented, target, kb, world.vocab,
        cfg.max_desc_tokens));
  }
  return world;
}

template <class S>
std::unordered_map<std::string, Vec<S>> encode_all_entities(
    const ModelParams<S>& params, const Vocabulary& vocab,
    const KnowledgeBase& kb) {
  std::unordered_map<std::string, Vec<S>> out;
  out.reserve(kb.entities.size());
  for (const Entity& e : kb.entities) {
    out.emplace(e.id, encode_entity<S>(params, vocab.encode(entity_text(
                                                    e, params.cfg.max_desc_tokens))));
  }
  return out;
}

// Decode a list of sentences against a candidate universe.
template <class S>
std::vector<Prediction> decode_corpus(
    const ModelParams<S>& params, const Vocabulary& vocab,
    const Bm25Index& index,
    const std::unordered_map<std::string, Vec<S>>& embeddings,
    const std::vector<std::string>& relation_ids,
    const std::vector<DatasetExample>& data, const PipelineConfig& cfg,
    const SpanConfig& span_cfg, size_t* n_empty = nullptr) {
  std::vector<Prediction> preds(data.size());
  std::atomic<size_t> empty_count{0};

  auto decode_range = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      Sentence sent = make_sentence(data[i].id, data[i].text);
      if (sent.tokens.empty()) {
        preds[i].sentence_id = data[i].id;
        ++empty_count;
        continue;
      }
      CandidateSet cands =
          generate_candidates(sent, index, cfg.top_k, span_cfg);
      if (cands.entries.empty()) {
        preds[i].sentence_id = data[i].id;
        ++empty_count;
        continue;
      }
      std::vector<std::string> ids;
      Mat<S> embs(params.cfg.hidden_dim,
                  static_cast<Eigen::Index>(cands.entries.size()));
      for (size_t c = 0; c < cands.entries.size(); ++c) {
        ids.push_back(cands.entries[c].id);
        embs.col(static_cast<Eigen::Index>(c)) =
            embeddings.at(cands.entries[c].id);
      }
      preds[i] = greedy_decode<S>(params, data[i].id,
                                  vocab.encode(sent.tokens), ids, embs,
                                  relation_ids, cfg.max_triples);
    }
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || data.size() < 2) {
    decode_range(0, data.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (data.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const size_t begin = t * chunk;
      const size_t end = std::min(data.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(decode_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (n_empty) *n_empty = empty_count.load();
  return preds;
}

std::vector<std::string> relation_id_list(const KnowledgeBase& kb) {
  std::vector<std::string> ids;
  for (const auto& r : kb.relations) ids.push_back(r.id);
  return ids;
}

template <class S>
TrainSummary train_impl(const PipelineConfig& cfg) {
  KnowledgeBase kb = load_kb(cfg.kb_entities, cfg.kb_relations);
  std::vector<DatasetExample> data = load_dataset(cfg.data);
  SpanSetup spans = make_span_setup(cfg);
  TrainingWorld world = prepare_training(kb, data, cfg, spans);

  ModelParams<S> params;
  params.init_random(make_model_config(cfg), world.vocab.size(),
                     static_cast<int>(kb.relations.size()), cfg.seed);

  std::ostream* log = cfg.quiet ? nullptr : &std::cout;
  if (log) {
    (*log) << "training on " << world.examples.size() << " sentences, |E|="
           << kb.entities.size() << ", |R|=" << kb.relations.size()
           << ", vocab=" << world.vocab.size()
           << ", params=" << params.param_count()
           << ", candidate coverage=" << world.coverage << "\n";
  }
  auto stats = train_model<S>(params, world.examples, make_train_options(cfg, log));

  ensure_dir(cfg.out_dir);
  const std::string metrics_path = cfg.out_dir + "/metrics.csv";
  {
    std::ofstream csv(metrics_path);
    if (!csv) throw IoError("cannot write " + metrics_path);
    csv << "epoch,loss,seconds\n";
    for (const auto& s : stats) {
      csv << s.epoch << "," << s.mean_loss << "," << s.seconds << "\n";
    }
  }

  json ckpt_config{{"relations", relations_json(kb)},
                   {"top_k", cfg.top_k},
                   {"span_strategy", cfg.span_strategy},
                   {"span_max_len", cfg.span_max_len},
                   {"bm25_k1", cfg.bm25_k1},
                   {"bm25_b", cfg.bm25_b},
                   {"max_triples", cfg.max_triples},
                   {"seed", cfg.seed},
                   {"precision", cfg.precision}};
  const std::string ckpt_path = cfg.out_dir + "/checkpoint.bed";
  save_checkpoint<S>(ckpt_path, params, world.vocab, ckpt_config);
  write_run_config(cfg.out_dir, "train", cfg.to_json());

  TrainSummary summary;
  summary.epochs_run = static_cast<int>(stats.size());
  summary.final_loss = stats.empty() ? 0.0 : stats.back().mean_loss;
  summary.param_count = params.param_count();
  summary.coverage = world.coverage;
  summary.checkpoint_path = ckpt_path;
  return summary;
}

template <class S>
std::vector<Prediction> predict_impl(const PipelineConfig& cfg,
                                     size_t* n_empty) {
  KnowledgeBase kb = load_kb(cfg.kb_entities, cfg.kb_relations);
  std::vector<DatasetExample> data = load_dataset(cfg.data);
  RawCheckpoint raw = read_checkpoint(cfg.checkpoint);
  check_relations_match(kb, raw.config);
  auto [params, vocab] =
      load_model<S>(raw, static_cast<int>(kb.relations.size()));

  PipelineConfig eff = cfg;
  eff.top_k = raw.config.value("top_k", cfg.top_k);
  eff.span_strategy = raw.config.value("span_strategy", cfg.span_strategy);
  eff.span_max_len = raw.config.value("span_max_len", cfg.span_max_len);
  eff.bm25_k1 = raw.config.value("bm25_k1", cfg.bm25_k1);
  eff.bm25_b = raw.config.value("bm25_b", cfg.bm25_b);
  SpanSetup spans = make_span_setup(eff);

  Bm25Index index = eff.index_path.empty()
                        ? build_bm25_index(kb, eff.bm25_k1, eff.bm25_b)
                        : load_bm25_index(eff.index_path);
  auto embeddings = encode_all_entities<S>(params, vocab, kb);
  return decode_corpus<S>(params, vocab, index, embeddings,
                          relation_id_list(kb), data, eff, spans.config,
                          n_empty);
}

template <class S>
NovelSummary novel_exp_impl(const PipelineConfig& cfg) {
  KnowledgeBase kb = load_kb(cfg.kb_entities, cfg.kb_relations);
  std::vector<DatasetExample> data = load_dataset(cfg.data);
  if (cfg.holdout_fraction <= 0.0 || cfg.holdout_fraction > 0.5) {
    throw DataError("holdout fraction must lie in (0, 0.5]");
  }

  // Seeded holdout sample over the entity set.
  auto rng = make_rng(cfg.seed, /*stream=*/20);
  std::vector<size_t> entity_order(kb.entities.size());
  for (size_t i = 0; i < entity_order.size(); ++i) entity_order[i] = i;
  shuffle(entity_order, rng);
  const size_t n_hold =
      static_cast<size_t>(cfg.holdout_fraction * kb.entities.size());
  std::unordered_set<std::string> holdout_ids;
  std::vector<Entity> holdout_entities;
  for (size_t i = 0; i < n_hold; ++i) {
    const Entity& e = kb.entities[entity_order[i]];
    holdout_ids.insert(e.id);
    holdout_entities.push_back(e);
  }

  // Sentences touching a holdout entity form the NEW-style split.
  std::vector<DatasetExample> clean, novel_split;
  for (const auto& ex : data) {
    bool touches = false;
    for (const Triple& t : ex.triples) {
      if (holdout_ids.count(t.h) || holdout_ids.count(t.t)) {
        touches = true;
        break;
      }
    }
    (touches ? novel_split : clean).push_back(ex);
  }
  if (novel_split.empty()) {
    throw DataError(
        "novel-exp: no sentence contains a holdout entity; "
        "increase --holdout-fraction");
  }
  if (clean.size() < 2) {
    throw DataError("novel-exp: too few holdout-free sentences to train on");
  }

  // Seeded 90/10 train / seen-test split of the holdout-free sentences.
  std::vector<size_t> clean_order(clean.size());
  for (size_t i = 0; i < clean_order.size(); ++i) clean_order[i] = i;
  shuffle(clean_order, rng);
  size_t n_seen_test = std::max<size_t>(1, clean.size() / 10);
  std::vector<DatasetExample> train_data, seen_test;
  for (size_t i = 0; i < clean_order.size(); ++i) {
    (i < n_seen_test ? seen_test : train_data).push_back(clean[clean_order[i]]);
  }

  // Training-time KB without the holdout entities.
  KnowledgeBase seen_kb;
  for (const Entity& e : kb.entities) {
    if (!holdout_ids.count(e.id)) {
      seen_kb.add_entity(e);
    }
  }
  for (const Relation& r : kb.relations) seen_kb.add_relation(r);

  SpanSetup spans = make_span_setup(cfg);
  TrainingWorld world = prepare_training(seen_kb, train_data, cfg, spans);
  ModelParams<S> params;
  params.init_random(make_model_config(cfg), world.vocab.size(),
                     static_cast<int>(seen_kb.relations.size()), cfg.seed);
  std::ostream* log = cfg.quiet ? nullptr : &std::cout;
  if (log) {
    (*log) << "novel-exp: " << train_data.size() << " train / "
           << seen_test.size() << " seen-test / " << novel_split.size()
           << " novel-test sentences, " << n_hold << " holdout entities\n";
  }
  train_model<S>(params, world.examples, make_train_options(cfg, log));

  NovelSummary summary;
  summary.n_holdout_entities = n_hold;
  summary.n_train = train_data.size();
  summary.n_seen_test = seen_test.size();
  summary.n_new = novel_split.size();

  // Post-training registration of the held-out entities; parameters must be
  // byte-identical afterwards.
  NovelRegistration<S> reg = register_novel_entities<S>(
      seen_kb, holdout_entities, params, world.vocab);
  summary.checksum_before = reg.checksum_before;
  summary.checksum_after = reg.checksum_after;

  auto relation_ids = relation_id_list(kb);
  auto preds_seen = decode_corpus<S>(params, world.vocab, reg.index,
                                     reg.embeddings, relation_ids, seen_test,
                                     cfg, spans.config);
  auto preds_new = decode_corpus<S>(params, world.vocab, reg.index,
                                    reg.embeddings, relation_ids, novel_split,
                                    cfg, spans.config);
  summary.seen = triple_prf(preds_seen, gold_of(seen_test));
  summary.novel = triple_prf(preds_new, gold_of(novel_split));

  ensure_dir(cfg.out_dir);
  json ckpt_config{{"relations", relations_json(seen_kb)},
                   {"top_k", cfg.top_k},
                   {"span_strategy", cfg.span_strategy},
                   {"span_max_len", cfg.span_max_len},
                   {"bm25_k1", cfg.bm25_k1},
                   {"bm25_b", cfg.bm25_b},
                   {"max_triples", cfg.max_triples},
                   {"seed", cfg.seed},
                   {"precision", cfg.precision}};
  save_checkpoint<S>(cfg.out_dir + "/checkpoint.bed", params, world.vocab,
                     ckpt_config);
  save_report(summary.seen, cfg.out_dir + "/report_seen.json");
  save_report(summary.novel, cfg.out_dir + "/report_new.json");
  json settings = cfg.to_json();
  settings["checksum_before"] = summary.checksum_before;
  settings["checksum_after"] = summary.checksum_after;
  write_run_config(cfg.out_dir, "novel-exp", settings);
  return summary;
}

}  // namespace

void run_gen_data(const GeneratorConfig& gen, const std::string& out_dir) {
  ensure_dir(out_dir);
  KnowledgeBase kb = generate_kb(gen);
  Corpus corpus = generate_corpus(kb, gen);
  save_kb(kb, out_dir + "/entities.jsonl", out_dir + "/relations.jsonl");
  save_dataset(corpus.train, out_dir + "/train.jsonl");
  save_dataset(corpus.dev, out_dir + "/dev.jsonl");
  save_dataset(corpus.test, out_dir + "/test.jsonl");
  json settings{{"seed", gen.seed},
                {"n_entities", gen.n_entities},
                {"n_relations", gen.n_relations},
                {"n_sentences", gen.n_sentences},
                {"token_dropout", gen.token_dropout},
                {"second_triple_prob", gen.second_triple_prob},
                {"novel_fraction", gen.novel_fraction}};
  write_run_config(out_dir, "gen-data", settings);
}

void run_build_index(const PipelineConfig& cfg) {
  KnowledgeBase kb = load_kb(cfg.kb_entities, cfg.kb_relations);
  Bm25Index index = build_bm25_index(kb, cfg.bm25_k1, cfg.bm25_b);
  ensure_dir(cfg.out_dir);
  const std::string path = cfg.index_path.empty()
                               ? cfg.out_dir + "/bm25_index.json"
                               : cfg.index_path;
  save_bm25_index(index, path);
  write_run_config(cfg.out_dir, "build-index", cfg.to_json());
}

CandidatesSummary run_candidates(const PipelineConfig& cfg) {
  KnowledgeBase kb = load_kb(cfg.kb_entities, cfg.kb_relations);
  std::vector<DatasetExample> data = load_dataset(cfg.data);
  SpanSetup spans = make_span_setup(cfg);
  Bm25Index index = cfg.index_path.empty()
                        ? build_bm25_index(kb, cfg.bm25_k1, cfg.bm25_b)
                        : load_bm25_index(cfg.index_path);
  std::vector<CandidateSet> cands;
  bool any_gold = false;
  for (const auto& ex : data) {
    Sentence s = make_sentence(ex.id, ex.text);
    cands.push_back(generate_candidates(s, index, cfg.top_k, spans.config));
    any_gold = any_gold || !ex.triples.empty();
  }
  ensure_dir(cfg.out_dir);
  const std::string path = cfg.out_dir + "/candidates.jsonl";
  save_candidates_jsonl(cands, path);

  CandidatesSummary summary;
  summary.n_sentences = cands.size();
  summary.candidates_path = path;
  if (any_gold) {
    summary.has_gold = true;
    summary.coverage = candidate_coverage(cands, gold_of(data));
  }
  json settings = cfg.to_json();
  if (summary.has_gold) settings["coverage"] = summary.coverage;
  write_run_config(cfg.out_dir, "candidates", settings);
  return summary;
}

TrainSummary run_train(const PipelineConfig& cfg) {
  if (cfg.precision == 64) return train_impl<double>(cfg);
  if (cfg.precision == 32) return train_impl<float>(cfg);
  throw DataError("precision must be 32 or 64");
}

PredictSummary run_predict(const PipelineConfig& cfg) {
  PredictSummary summary;
  std::vector<Prediction> preds;
  if (cfg.precision == 64) {
    preds = predict_impl<double>(cfg, &summary.n_empty_candidates);
  } else if (cfg.precision == 32) {
    preds = predict_impl<float>(cfg, &summary.n_empty_candidates);
  } else {
    throw DataError("precision must be 32 or 64");
  }
  ensure_dir(cfg.out_dir);
  const std::string path = cfg.predictions.empty()
                               ? cfg.out_dir + "/predictions.jsonl"
                               : cfg.predictions;
  save_predictions_jsonl(preds, path);
  summary.n_sentences = preds.size();
  summary.predictions_path = path;
  write_run_config(cfg.out_dir, "predict", cfg.to_json());
  return summary;
}

EvalReport run_eval(const PipelineConfig& cfg) {
  std::vector<DatasetExample> data = load_dataset(cfg.data);
  std::vector<Prediction> preds;
  if (!cfg.predictions.empty()) {
    preds = load_predictions_jsonl(cfg.predictions);
    if (preds.size() != data.size()) {
      throw DataError("eval: predictions/gold sentence count mismatch");
    }
    for (size_t i = 0; i < preds.size(); ++i) {
      if (preds[i].sentence_id != data[i].id) {
        throw DataError("eval: sentence id mismatch at line " +
                        std::to_string(i + 1));
      }
    }
  } else if (!cfg.checkpoint.empty()) {
    size_t n_empty = 0;
    if (cfg.precision == 64) {
      preds = predict_impl<double>(cfg, &n_empty);
    } else {
      preds = predict_impl<float>(cfg, &n_empty);
    }
  } else {
    throw DataError("eval: need --pred or --checkpoint");
  }
  EvalReport report = triple_prf(preds, gold_of(data));
  ensure_dir(cfg.out_dir);
  save_report(report, cfg.out_dir + "/report.json");
  write_run_config(cfg.out_dir, "eval", cfg.to_json());
  return report;
}

NovelSummary run_novel_exp(const PipelineConfig& cfg) {
  if (cfg.precision == 64) return novel_exp_impl<double>(cfg);
  if (cfg.precision == 32) return novel_exp_impl<float>(cfg);
  throw DataError("precision must be 32 or 64");
}

void run_encode_entities(const PipelineConfig& cfg) {
  KnowledgeBase kb = load_kb(cfg.kb_entities, cfg.kb_relations);
  RawCheckpoint raw = read_checkpoint(cfg.checkpoint);
  check_relations_match(kb, raw.config);
  auto [params, vocab] =
      load_model<float>(raw, static_cast<int>(kb.relations.size()));
  ensure_dir(cfg.out_dir);
  const std::string path = cfg.out_dir + "/embeddings.jsonl";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const Entity& e : kb.entities) {
    Vec<float> v = encode_entity<float>(
        params, vocab.encode(entity_text(e, params.cfg.max_desc_tokens)));
    json vec = json::array();
    for (Eigen::Index i = 0; i < v.rows(); ++i) vec.push_back(v(i));
    json j{{"id", e.id}, {"vector", std::move(vec)}};
    out << j.dump() << "\n";
  }
  write_run_config(cfg.out_dir, "encode-entities", cfg.to_json());
}

std::vector<BlockCheckResult> run_grad_check(const GradCheckOptions& opt) {
  return run_block_checks(opt.dims, opt.n_seeds, opt.eps);
}

}  // namespace bed
