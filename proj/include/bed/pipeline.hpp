#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bed/block_checks.hpp"
#include "bed/metrics.hpp"
#include "bed/synth.hpp"

namespace bed {

// Resolved configuration for one CLI invocation. Every subcommand dumps the
// parts it used (plus the seed) into <out>/config.json.
struct PipelineConfig {
  // paths
  std::string kb_entities;
  std::string kb_relations;
  std::string data;
  std::string out_dir = "runs/default";
  std::string checkpoint;
  std::string index_path;
  std::string predictions;
  std::string stopwords_path;

  // retrieval
  int top_k = 64;
  std::string span_strategy = "capitalized";
  int span_max_len = 5;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;

  // model
  int hidden = 128;
  int embed = 64;
  int ngram_max = 3;
  int max_desc_tokens = 32;

  // training
  int epochs = 300;
  int batch = 16;
  double lr = 1e-3;
  double clip_norm = 5.0;
  int patience = 10;
  double early_stop_loss = 0.0;

  // inference / experiment
  int max_triples = 8;
  double holdout_fraction = 0.2;

  // misc
  uint64_t seed = 7;
  int threads = 1;
  int precision = 32;  // 32 or 64
  bool quiet = false;

  nlohmann::json to_json() const;
};

struct TrainSummary {
  int epochs_run = 0;
  double final_loss = 0.0;
  long param_count = 0;
  double coverage = 1.0;  // gold coverage of the (pre-augmentation) candidates
  std::string checkpoint_path;
};

struct PredictSummary {
  size_t n_sentences = 0;
  size_t n_empty_candidates = 0;
  std::string predictions_path;
};

struct CandidatesSummary {
  size_t n_sentences = 0;
  bool has_gold = false;
  double coverage = 0.0;
  std::string candidates_path;
};

struct NovelSummary {
  EvalReport seen;
  EvalReport novel;
  uint64_t checksum_before = 0;
  uint64_t checksum_after = 0;
  size_t n_holdout_entities = 0;
  size_t n_train = 0;
  size_t n_seen_test = 0;
  size_t n_new = 0;
};

// gen-data: synthetic KB + 80/10/10 corpus into out_dir.
void run_gen_data(const GeneratorConfig& gen, const std::string& out_dir);

void run_build_index(const PipelineConfig& cfg);
CandidatesSummary run_candidates(const PipelineConfig& cfg);
TrainSummary run_train(const PipelineConfig& cfg);
PredictSummary run_predict(const PipelineConfig& cfg);

// With cfg.predictions set, scores an existing predictions file against
// cfg.data; otherwise decodes cfg.checkpoint over cfg.data first.
EvalReport run_eval(const PipelineConfig& cfg);

NovelSummary run_novel_exp(const PipelineConfig& cfg);
void run_encode_entities(const PipelineConfig& cfg);

struct GradCheckOptions {
  int dims = 4;
  int n_seeds = 5;
  double eps = 1e-5;
  double threshold = 1e-5;
};
std::vector<BlockCheckResult> run_grad_check(const GradCheckOptions& opt);

}  // namespace bed
