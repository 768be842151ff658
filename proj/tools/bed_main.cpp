// Command-line entry point: gen-data, build-index, candidates, train,
// predict, eval, novel-exp, encode-entities, grad-check.
//
// Exit codes: 0 ok, 2 usage, 3 missing/unreadable files, 4 malformed data,
// 5 numeric failure (non-finite loss, gradient check above threshold).

#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "bed/errors.hpp"
#include "bed/pipeline.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitData = 4;
constexpr int kExitNumeric = 5;

void add_kb_flags(CLI::App* cmd, bed::PipelineConfig& cfg) {
  cmd->add_option("--kb-entities", cfg.kb_entities, "entities.jsonl path")
      ->required();
  cmd->add_option("--kb-relations", cfg.kb_relations, "relations.jsonl path")
      ->required();
}

void add_retrieval_flags(CLI::App* cmd, bed::PipelineConfig& cfg) {
  cmd->add_option("--top-k", cfg.top_k, "candidate list size");
  cmd->add_option("--span-strategy", cfg.span_strategy,
                  "capitalized|exhaustive");
  cmd->add_option("--span-max-len", cfg.span_max_len, "max span length");
  cmd->add_option("--bm25-k1", cfg.bm25_k1, "BM25 k1");
  cmd->add_option("--bm25-b", cfg.bm25_b, "BM25 b");
  cmd->add_option("--stopwords", cfg.stopwords_path, "stopword list file");
}

void add_model_flags(CLI::App* cmd, bed::PipelineConfig& cfg) {
  cmd->add_option("--hidden", cfg.hidden, "hidden state size");
  cmd->add_option("--embed", cfg.embed, "word embedding size");
  cmd->add_option("--ngram-max", cfg.ngram_max, "largest attention window");
  cmd->add_option("--max-desc-tokens", cfg.max_desc_tokens,
                  "description truncation");
}

void add_common_flags(CLI::App* cmd, bed::PipelineConfig& cfg) {
  cmd->add_option("--seed", cfg.seed, "run seed");
  cmd->add_option("--threads", cfg.threads, "worker cap for decoding");
  cmd->add_option("--precision", cfg.precision, "32 or 64")
      ->check(CLI::IsMember({32, 64}));
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_flag("--quiet", cfg.quiet, "suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Canonical relation extraction with a bi-encoder-decoder"};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file (key=value lines)");

  bed::PipelineConfig cfg;
  bed::GeneratorConfig gen = bed::GeneratorConfig::defaults();
  bed::GradCheckOptions gc;
  std::string gen_out = "runs/fixture";

  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic KB + corpus");
  gen_cmd->add_option("--out", gen_out, "output directory");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--entities", gen.n_entities, "entity count");
  gen_cmd->add_option("--relations", gen.n_relations, "relation count");
  gen_cmd->add_option("--sentences", gen.n_sentences, "sentence count");
  gen_cmd->add_option("--token-dropout", gen.token_dropout,
                      "per-token drop probability");
  gen_cmd->add_option("--second-triple-prob", gen.second_triple_prob,
                      "fraction of two-triple sentences");

  auto* index_cmd = app.add_subcommand("build-index", "serialize the BM25 index");
  add_kb_flags(index_cmd, cfg);
  index_cmd->add_option("--index", cfg.index_path, "output index path");
  index_cmd->add_option("--bm25-k1", cfg.bm25_k1, "BM25 k1");
  index_cmd->add_option("--bm25-b", cfg.bm25_b, "BM25 b");
  index_cmd->add_option("--out", cfg.out_dir, "output directory");

  auto* cand_cmd = app.add_subcommand("candidates",
                                      "retrieve candidates + report coverage");
  add_kb_flags(cand_cmd, cfg);
  cand_cmd->add_option("--data", cfg.data, "dataset.jsonl")->required();
  cand_cmd->add_option("--index", cfg.index_path, "prebuilt index (optional)");
  add_retrieval_flags(cand_cmd, cfg);
  cand_cmd->add_option("--out", cfg.out_dir, "output directory");

  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_kb_flags(train_cmd, cfg);
  train_cmd->add_option("--data", cfg.data, "training dataset.jsonl")->required();
  add_retrieval_flags(train_cmd, cfg);
  add_model_flags(train_cmd, cfg);
  train_cmd->add_option("--epochs", cfg.epochs, "max epochs");
  train_cmd->add_option("--batch", cfg.batch, "batch size");
  train_cmd->add_option("--lr", cfg.lr, "learning rate");
  train_cmd->add_option("--clip", cfg.clip_norm, "gradient norm clip");
  train_cmd->add_option("--patience", cfg.patience,
                        "epochs without improvement before stopping");
  train_cmd->add_option("--early-stop-loss", cfg.early_stop_loss,
                        "stop once mean loss falls below (0 = off)");
  add_common_flags(train_cmd, cfg);

  auto* predict_cmd = app.add_subcommand("predict", "decode triples");
  add_kb_flags(predict_cmd, cfg);
  predict_cmd->add_option("--data", cfg.data, "dataset.jsonl")->required();
  predict_cmd->add_option("--checkpoint", cfg.checkpoint, "checkpoint.bed")
      ->required();
  predict_cmd->add_option("--index", cfg.index_path, "prebuilt index");
  predict_cmd->add_option("--pred-out", cfg.predictions,
                          "predictions output path");
  predict_cmd->add_option("--max-triples", cfg.max_triples,
                          "decode length cap");
  add_common_flags(predict_cmd, cfg);

  auto* eval_cmd = app.add_subcommand("eval", "score predictions");
  eval_cmd->add_option("--data", cfg.data, "gold dataset.jsonl")->required();
  eval_cmd->add_option("--pred", cfg.predictions, "predictions.jsonl");
  eval_cmd->add_option("--checkpoint", cfg.checkpoint,
                       "decode this checkpoint instead of --pred");
  eval_cmd->add_option("--kb-entities", cfg.kb_entities, "entities.jsonl");
  eval_cmd->add_option("--kb-relations", cfg.kb_relations, "relations.jsonl");
  eval_cmd->add_option("--max-triples", cfg.max_triples, "decode length cap");
  add_common_flags(eval_cmd, cfg);

  auto* novel_cmd = app.add_subcommand(
      "novel-exp", "hold out entities, train, evaluate seen vs novel");
  add_kb_flags(novel_cmd, cfg);
  novel_cmd->add_option("--data", cfg.data, "full dataset.jsonl")->required();
  novel_cmd->add_option("--holdout-fraction", cfg.holdout_fraction,
                        "entity holdout fraction in (0, 0.5]");
  add_retrieval_flags(novel_cmd, cfg);
  add_model_flags(novel_cmd, cfg);
  novel_cmd->add_option("--epochs", cfg.epochs, "max epochs");
  novel_cmd->add_option("--batch", cfg.batch, "batch size");
  novel_cmd->add_option("--lr", cfg.lr, "learning rate");
  novel_cmd->add_option("--early-stop-loss", cfg.early_stop_loss,
                        "stop once mean loss falls below (0 = off)");
  novel_cmd->add_option("--max-triples", cfg.max_triples, "decode length cap");
  add_common_flags(novel_cmd, cfg);

  auto* enc_cmd = app.add_subcommand("encode-entities",
                                     "export the entity embedding cache");
  add_kb_flags(enc_cmd, cfg);
  enc_cmd->add_option("--checkpoint", cfg.checkpoint, "checkpoint.bed")
      ->required();
  enc_cmd->add_option("--out", cfg.out_dir, "output directory");

  auto* gc_cmd = app.add_subcommand("grad-check",
                                    "finite-difference gradient verification");
  gc_cmd->add_option("--dims", gc.dims, "hidden size of the test blocks");
  gc_cmd->add_option("--seeds", gc.n_seeds, "seeds per block");
  gc_cmd->add_option("--eps", gc.eps, "finite-difference step");
  gc_cmd->add_option("--threshold", gc.threshold, "max relative error allowed");
  int gc_precision = 64;
  gc_cmd->add_option("--precision", gc_precision, "checks always run in 64")
      ->check(CLI::IsMember({64}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) {
      bed::run_gen_data(gen, gen_out);
      std::cout << "wrote fixture to " << gen_out << "\n";
    } else if (index_cmd->parsed()) {
      bed::run_build_index(cfg);
      std::cout << "index written\n";
    } else if (cand_cmd->parsed()) {
      auto summary = bed::run_candidates(cfg);
      std::cout << "candidates for " << summary.n_sentences << " sentences -> "
                << summary.candidates_path << "\n";
      if (summary.has_gold) {
        std::cout << "coverage " << std::setprecision(6) << summary.coverage
                  << "\n";
      }
    } else if (train_cmd->parsed()) {
      auto summary = bed::run_train(cfg);
      std::cout << "trained " << summary.epochs_run << " epochs, final loss "
                << summary.final_loss << ", " << summary.param_count
                << " parameters -> " << summary.checkpoint_path << "\n";
    } else if (predict_cmd->parsed()) {
      auto summary = bed::run_predict(cfg);
      std::cout << "decoded " << summary.n_sentences << " sentences ("
                << summary.n_empty_candidates
                << " with empty candidate sets) -> "
                << summary.predictions_path << "\n";
    } else if (eval_cmd->parsed()) {
      auto report = bed::run_eval(cfg);
      std::cout << "P " << report.precision << " R " << report.recall << " F1 "
                << report.f1 << " (tp " << report.tp << " fp " << report.fp
                << " fn " << report.fn << ")\n";
    } else if (novel_cmd->parsed()) {
      auto summary = bed::run_novel_exp(cfg);
      std::cout << "seen  P " << summary.seen.precision << " R "
                << summary.seen.recall << " F1 " << summary.seen.f1 << "\n";
      std::cout << "novel P " << summary.novel.precision << " R "
                << summary.novel.recall << " F1 " << summary.novel.f1 << "\n";
      std::cout << "param checksum " << std::hex << summary.checksum_before
                << " -> " << summary.checksum_after << std::dec << "\n";
    } else if (enc_cmd->parsed()) {
      bed::run_encode_entities(cfg);
      std::cout << "embeddings written\n";
    } else if (gc_cmd->parsed()) {
      auto results = bed::run_grad_check(gc);
      double worst = 0.0;
      for (const auto& r : results) {
        std::cout << r.block << ": max rel err " << std::scientific
                  << r.report.max_rel_err << std::defaultfloat << " ("
                  << r.report.checked << " coordinates, worst at "
                  << (r.report.worst_param.empty() ? "-" : r.report.worst_param)
                  << ")\n";
        worst = std::max(worst, r.report.max_rel_err);
      }
      if (worst >= gc.threshold) {
        std::cerr << "gradient check FAILED: " << std::scientific << worst
                  << " >= " << gc.threshold << "\n";
        return kExitNumeric;
      }
      std::cout << "gradient check passed (worst " << std::scientific << worst
                << ")\n";
    }
  } catch (const bed::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const bed::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const bed::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
