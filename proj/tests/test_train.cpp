#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bed/rng.hpp"
#include "bed/train.hpp"

using namespace bed;

namespace {

KnowledgeBase fixture_kb() {
  KnowledgeBase kb;
  kb.add_entity({"Q6669593", "Megan Manthey", "pageant contestant", {}, {}});
  kb.add_entity({"Q670897", "Ferndale", "city in washington", {}, {}});
  kb.add_entity({"Q99", "Seattle", "city in washington", {}, {}});
  kb.add_relation({"P19", "place of birth"});
  kb.add_relation({"P108", "employer"});
  kb.add_relation({"P36", "capital"});
  return kb;
}

}  // namespace

TEST_CASE("linearize_triples") {
  auto seq = linearize_triples({{"Q6669593", "P19", "Q670897"}});
  REQUIRE(seq.size() == 4);
  CHECK(seq.steps[0].mode == StepMode::Entity);
  CHECK(seq.steps[0].id == "Q6669593");
  CHECK(seq.steps[1].mode == StepMode::Relation);
  CHECK(seq.steps[1].id == "P19");
  CHECK(seq.steps[2].mode == StepMode::Entity);
  CHECK(seq.steps[2].id == "Q670897");
  CHECK(seq.steps[3].mode == StepMode::End);

  auto empty = linearize_triples({});
  REQUIRE(empty.size() == 1);
  CHECK(empty.steps[0].mode == StepMode::End);

  auto two = linearize_triples({{"A", "R", "B"}, {"C", "R", "D"}});
  CHECK(two.size() == 7);
  validate_target_pattern(two);

  TargetSequence bad;
  bad.steps = {{StepMode::Relation, "R"}, {StepMode::End, ""}};
  CHECK_THROWS_AS(validate_target_pattern(bad), DataError);
  TargetSequence bad2;
  bad2.steps = {{StepMode::Entity, "A"}, {StepMode::End, ""}};
  CHECK_THROWS_AS(validate_target_pattern(bad2), DataError);
}

TEST_CASE("augment_candidates") {
  KnowledgeBase kb = fixture_kb();
  CandidateSet cands{"s0", {{"Q6669593", 2.0}}};
  std::vector<Triple> gold = {{"Q6669593", "P19", "Q670897"}};

  CandidateSet aug = augment_candidates(cands, gold, kb);
  REQUIRE(aug.entries.size() == 2);
  // Retrieved ranking untouched; injected entry appended with the sentinel.
  CHECK(aug.entries[0].id == "Q6669593");
  CHECK(aug.entries[0].score == 2.0);
  CHECK(aug.entries[1].id == "Q670897");
  CHECK(std::isinf(aug.entries[1].score));

  // Idempotent / no-op when everything is present.
  CandidateSet again = augment_candidates(aug, gold, kb);
  CHECK(again.entries.size() == aug.entries.size());

  // Empty candidate set gets exactly the gold entities.
  CandidateSet from_empty = augment_candidates({"s1", {}}, gold, kb);
  CHECK(from_empty.entries.size() == 2);

  // Gold id outside the KB is an error.
  CHECK_THROWS_WITH_AS(
      augment_candidates(cands, {{"QX", "P19", "Q670897"}}, kb),
      doctest::Contains("QX"), DataError);
}

TEST_CASE("build_encoded_example resolves ids, modes and END positions") {
  KnowledgeBase kb = fixture_kb();
  Sentence sent =
      make_sentence("s0", "Megan Manthey's hometown is Ferndale, Washington.");
  CandidateSet cands{"s0", {{"Q670897", 3.0}, {"Q6669593", 2.0}}};
  TargetSequence target = linearize_triples({{"Q6669593", "P19", "Q670897"}});
  Vocabulary vocab;
  vocab.add_all(sent.tokens);
  for (const auto& e : kb.entities) vocab.add_all(entity_text(e));

  EncodedExample ex =
      build_encoded_example(sent, cands, target, kb, vocab, 32);
  REQUIRE(ex.steps.size() == 4);
  CHECK(ex.steps[0].entity_mode);
  CHECK(ex.steps[0].allow_end);
  CHECK(ex.steps[0].target == 1);  // Q6669593 sits at index 1
  CHECK_FALSE(ex.steps[1].entity_mode);
  CHECK(ex.steps[1].target == 0);  // P19
  CHECK(ex.steps[2].entity_mode);
  CHECK_FALSE(ex.steps[2].allow_end);
  CHECK(ex.steps[2].target == 0);  // Q670897
  CHECK(ex.steps[3].allow_end);
  CHECK(ex.steps[3].target == 2);  // END = candidate count
  CHECK(ex.cand_texts.size() == 2);

  // Gold entity missing from the candidate set violates the invariant.
  CandidateSet missing{"s0", {{"Q670897", 3.0}}};
  CHECK_THROWS_WITH_AS(
      build_encoded_example(sent, missing, target, kb, vocab, 32),
      doctest::Contains("missing from candidate set"), DataError);
}

TEST_CASE("sequence_loss equals the hand-computed uniform value") {
  // All-zero parameters force uniform distributions at every step:
  // supports are 5 (4 candidates + END), 3 relations, 4, 5.
  ModelConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 4;
  cfg.ngram_max = 2;
  ModelParams<double> params;
  params.allocate(cfg, 11, 3);  // zero-initialized

  EncodedExample ex;
  ex.id = "fixture";
  ex.sentence_ids = {3, 4, 5};
  ex.cand_texts = {{3, 1}, {4, 1}, {5, 1, 6}, {7, 1}};
  ex.steps = {{true, true, 2}, {false, false, 1}, {true, false, 0},
              {true, true, 4}};

  const double want =
      (std::log(5.0) + std::log(3.0) + std::log(4.0) + std::log(5.0)) / 4.0;
  double loss = sequence_loss<double>(params, ex, false);
  CHECK(loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sequence_loss is zero under a rigged sure-thing model") {
  // Candidate embeddings enter scores via dot products; by blowing up the
  // word embeddings and the right head entries the gold path gets a margin
  // far beyond double rounding, so -log p(gold) underflows to exactly 0.
  ModelConfig cfg;
  cfg.embed_dim = 2;
  cfg.hidden_dim = 2;
  cfg.ngram_max = 1;
  ModelParams<double> params;
  params.allocate(cfg, 6, 2);

  // One candidate, one relation target; supports: {cand, END}, |R|=2,
  // {cand}, {cand, END}.
  EncodedExample ex;
  ex.id = "sure";
  ex.sentence_ids = {3};
  ex.cand_texts = {{4}};
  ex.steps = {{true, true, 0}, {false, false, 1}, {true, false, 0},
              {true, true, 1}};

  // Entity encoder: update gate saturated, g = tanh(emb); token 4 embeds to
  // (40, 40), so the candidate encodes to exactly (1, 1).
  params.ent_enc.bz.value.setConstant(40.0);
  params.ent_enc.wh.value.setIdentity();
  params.word_emb.value.col(4) << 40.0, 40.0;
  // Decoder: h_dec = tanh(x), i.e. it tracks the sign of its input.
  params.dec.bz.value.setConstant(40.0);
  params.dec.wh.value.setIdentity();
  // Attention reduces to h_att = tanh(60 * h_dec): queries are zero so the
  // zero sentence states contribute nothing through the combine matrix.
  params.attn_combine.value.setZero();
  params.attn_combine.value(0, 0) = 60.0;
  params.attn_combine.value(1, 1) = 60.0;
  // BOS and the relation embedding push the state to +1; feeding the
  // predicted entity back pushes it to -1, where END wins by ~100.
  params.bos_input.value << 40.0, 40.0;
  params.rel_emb.value.col(1) << 40.0, 40.0;
  params.ent_input_proj.value.setConstant(-80.0);
  params.end_entity.value << -50.0, -50.0;
  // Relation head locks onto relation 1.
  params.rel_head_b.value << -100.0, 100.0;

  double loss = sequence_loss<double>(params, ex, false);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-12);
}

TEST_CASE("sequence_loss stays non-negative on random models") {
  auto rng = make_rng(55, 0);
  for (int trial = 0; trial < 100; ++trial) {
    ModelConfig cfg;
    cfg.embed_dim = 2 + static_cast<int>(next_index(rng, 3));
    cfg.hidden_dim = 2 + static_cast<int>(next_index(rng, 3));
    cfg.ngram_max = 1 + static_cast<int>(next_index(rng, 3));
    ModelParams<double> params;
    params.init_random(cfg, 10, 3, 1000 + trial);

    EncodedExample ex;
    ex.id = "r" + std::to_string(trial);
    const int n_tok = 1 + static_cast<int>(next_index(rng, 5));
    for (int i = 0; i < n_tok; ++i) {
      ex.sentence_ids.push_back(3 + static_cast<int>(next_index(rng, 7)));
    }
    const int n_cand = 1 + static_cast<int>(next_index(rng, 4));
    for (int c = 0; c < n_cand; ++c) {
      std::vector<int> text = {3 + static_cast<int>(next_index(rng, 7)), 1};
      ex.cand_texts.push_back(text);
    }
    ex.steps = {{true, true, static_cast<int>(next_index(rng, n_cand))},
                {false, false, static_cast<int>(next_index(rng, 3))},
                {true, false, static_cast<int>(next_index(rng, n_cand))},
                {true, true, n_cand}};
    CHECK(sequence_loss<double>(params, ex, false) >= 0.0);
  }
}

TEST_CASE("training overfits a single example") {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  cfg.ngram_max = 2;
  ModelParams<float> params;
  params.init_random(cfg, 12, 3, 7);

  EncodedExample ex;
  ex.id = "overfit";
  ex.sentence_ids = {3, 4, 5, 6, 7};
  ex.cand_texts = {{3, 1, 8}, {4, 1, 9}, {5, 1, 10}};
  ex.steps = {{true, true, 1}, {false, false, 2}, {true, false, 0},
              {true, true, 3}};

  const double initial =
      static_cast<double>(sequence_loss<float>(params, ex, false));
  TrainOptions opt;
  opt.epochs = 200;
  opt.batch_size = 1;
  opt.seed = 7;
  opt.patience = 200;  // keep going
  auto stats = train_model<float>(params, {ex}, opt);
  CHECK(stats.back().mean_loss < initial);
  CHECK(stats.back().mean_loss < 0.1);
}

TEST_CASE("training is deterministic given the seed") {
  auto run = [] {
    ModelConfig cfg;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 6;
    cfg.ngram_max = 2;
    ModelParams<float> params;
    params.init_random(cfg, 12, 3, 7);
    std::vector<EncodedExample> data;
    for (int i = 0; i < 6; ++i) {
      EncodedExample ex;
      ex.id = "d" + std::to_string(i);
      ex.sentence_ids = {3 + i % 4, 4, 5 + i % 3};
      ex.cand_texts = {{3, 1}, {4 + i % 5, 1}};
      ex.steps = {{true, true, i % 2}, {false, false, i % 3},
                  {true, false, (i + 1) % 2}, {true, true, 2}};
      data.push_back(ex);
    }
    TrainOptions opt;
    opt.epochs = 8;
    opt.batch_size = 4;
    opt.seed = 7;
    auto stats = train_model<float>(params, data, opt);
    return std::pair{params.checksum(), stats};
  };
  auto [ck1, stats1] = run();
  auto [ck2, stats2] = run();
  CHECK(ck1 == ck2);
  REQUIRE(stats1.size() == stats2.size());
  for (size_t i = 0; i < stats1.size(); ++i) {
    CHECK(stats1[i].mean_loss == stats2[i].mean_loss);
  }
}

TEST_CASE("train rejects an empty dataset") {
  ModelParams<float> params;
  ModelConfig cfg;
  params.init_random(cfg, 4, 1, 7);
  CHECK_THROWS_AS(train_model<float>(params, {}, {}), DataError);
}
