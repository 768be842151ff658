#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bed/checkpoint.hpp"
#include "bed/model.hpp"
#include "bed/rng.hpp"

using namespace bed;

namespace {

ModelParams<double> tiny_model(uint64_t seed, int vocab = 12, int rels = 3) {
  ModelConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 4;
  cfg.ngram_max = 3;
  ModelParams<double> p;
  p.init_random(cfg, vocab, rels, seed);
  return p;
}

}  // namespace

TEST_CASE("encode_entity determinism and zero propagation") {
  auto p = tiny_model(21);
  std::vector<int> ids = {3, 1, 5, 6};
  Vec<double> a = encode_entity<double>(p, ids);
  Vec<double> b = encode_entity<double>(p, ids);
  CHECK((a - b).norm() == 0.0);

  // Same text -> same vector regardless of which entity it came from.
  std::vector<int> same = ids;
  CHECK((encode_entity<double>(p, same) - a).norm() == 0.0);

  ModelParams<double> zeros;
  zeros.allocate(p.cfg, 12, 3);
  CHECK(encode_entity<double>(zeros, ids).norm() == 0.0);

  CHECK_THROWS_AS(encode_entity<double>(p, {}), DataError);
}

TEST_CASE("parameters are untouched by encoding") {
  auto p = tiny_model(22);
  const uint64_t before = p.checksum();
  encode_entity<double>(p, {4, 1, 7});
  encode_sentence<double>(p, {3, 5, 8, 9});
  CHECK(p.checksum() == before);
}

TEST_CASE("encode_sentence matches run_gru on the embedded sequence") {
  auto p = tiny_model(23);
  std::vector<int> ids = {3, 7, 2, 9};
  Mat<double> hs = encode_sentence<double>(p, ids);
  Mat<double> x = embed_tokens<double>(p, ids);
  Mat<double> want = run_gru<double>(p.sent_enc, x, Vec<double>::Zero(4));
  CHECK((hs - want).norm() == 0.0);

  // Prefix property: the first i columns depend only on the first i tokens.
  Mat<double> prefix = encode_sentence<double>(p, {3, 7});
  CHECK((hs.leftCols(2) - prefix).norm() == 0.0);

  // Single token = one gru_cell application.
  Mat<double> one = encode_sentence<double>(p, {3});
  Vec<double> cell = gru_cell<double>(p.sent_enc, x.col(0), Vec<double>::Zero(4));
  CHECK((one.col(0) - cell).norm() == 0.0);
}

TEST_CASE("batched entity encoding agrees with the per-entity path") {
  auto p = tiny_model(24);
  std::vector<std::vector<int>> texts = {{3, 1}, {4, 1, 7, 8}, {5, 1, 9}};
  Mat<double> batch = encode_entities_batch<double>(p, texts);
  for (size_t i = 0; i < texts.size(); ++i) {
    Vec<double> single = encode_entity<double>(p, texts[i]);
    CHECK((batch.col(static_cast<Eigen::Index>(i)) - single).norm() < 1e-12);
  }
  CHECK(encode_entities_batch<double>(p, {}).cols() == 0);
}

TEST_CASE("ngram attention properties") {
  auto p = tiny_model(25);
  const int dh = p.cfg.hidden_dim;
  auto rng = make_rng(26, 0);
  Vec<double> h_dec(dh);
  for (int i = 0; i < dh; ++i) h_dec(i) = next_uniform(rng, -1.0, 1.0);

  // Window counts: 3 tokens, levels 1..3 -> 3, 2, 1 windows; weights sum to 1.
  Mat<double> hs(dh, 3);
  for (int i = 0; i < hs.size(); ++i) hs.data()[i] = next_uniform(rng, -1, 1);
  AttentionCache<double> cache;
  ngram_attention<double>(p, h_dec, hs, &cache);
  REQUIRE(cache.pooled[0].cols() == 3);
  REQUIRE(cache.pooled[1].cols() == 2);
  REQUIRE(cache.pooled[2].cols() == 1);
  for (int n = 0; n < 3; ++n) {
    CHECK(cache.alpha[n].sum() == doctest::Approx(1.0).epsilon(1e-9));
  }

  // All sentence states identical -> every context vector equals that state,
  // independent of h_dec.
  Vec<double> v(dh);
  for (int i = 0; i < dh; ++i) v(i) = next_uniform(rng, -1.0, 1.0);
  Mat<double> same(dh, 3);
  same << v, v, v;
  AttentionCache<double> c2;
  ngram_attention<double>(p, h_dec, same, &c2);
  for (int n = 1; n <= 3; ++n) {
    Vec<double> ctx = c2.concat.segment(n * dh, dh);
    CHECK((ctx - v).norm() < 1e-9);
  }

  // Short sentences zero-pad missing levels.
  Mat<double> shorter(dh, 1);
  shorter << v;
  AttentionCache<double> c3;
  ngram_attention<double>(p, h_dec, shorter, &c3);
  CHECK(c3.concat.segment(2 * dh, dh).norm() == 0.0);
  CHECK(c3.concat.segment(3 * dh, dh).norm() == 0.0);
}

TEST_CASE("decoder_step entity mode scores candidates by dot product") {
  auto p = tiny_model(27);
  const int dh = p.cfg.hidden_dim;
  std::vector<int> sent = {3, 4, 5};
  Mat<double> hs = encode_sentence<double>(p, sent);

  // Orthogonal candidates: only one aligned with h_att gets the mass.
  // Build candidates from the attention output itself.
  Vec<double> h_out(dh);
  Mat<double> probe = Mat<double>::Zero(dh, 1);
  probe.col(0) = Vec<double>::Ones(dh);  // arbitrary
  DecoderStepCache<double> cache;
  decoder_step<double>(p, PrevToken::bos(), Vec<double>::Zero(dh), hs, probe,
                       true, false, h_out, &cache);
  Vec<double> h_att = cache.h_att;

  Mat<double> cands = Mat<double>::Zero(dh, 3);
  cands.col(0) = h_att;         // aligned
  cands.col(1) = -h_att;        // anti-aligned
  cands.col(2).setZero();       // orthogonal
  Vec<double> probs = decoder_step<double>(p, PrevToken::bos(),
                                           Vec<double>::Zero(dh), hs, cands,
                                           true, false, h_out);
  CHECK(probs(0) > probs(2));
  CHECK(probs(2) > probs(1));
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-9));

  // Identical candidates -> uniform.
  Mat<double> same(dh, 4);
  for (int i = 0; i < 4; ++i) same.col(i) = h_att;
  Vec<double> uni = decoder_step<double>(p, PrevToken::bos(),
                                         Vec<double>::Zero(dh), hs, same, true,
                                         false, h_out);
  for (int i = 0; i < 4; ++i) {
    CHECK(uni(i) == doctest::Approx(0.25).epsilon(1e-9));
  }

  // Permuting candidates permutes probabilities (scores travel with ids).
  Mat<double> perm(dh, 3);
  perm.col(0) = cands.col(2);
  perm.col(1) = cands.col(0);
  perm.col(2) = cands.col(1);
  Vec<double> probs_perm = decoder_step<double>(p, PrevToken::bos(),
                                                Vec<double>::Zero(dh), hs, perm,
                                                true, false, h_out);
  CHECK(probs_perm(1) == doctest::Approx(probs(0)).epsilon(1e-9));
  CHECK(probs_perm(2) == doctest::Approx(probs(1)).epsilon(1e-9));
  CHECK(probs_perm(0) == doctest::Approx(probs(2)).epsilon(1e-9));

  // END appended only when permitted.
  Vec<double> with_end = decoder_step<double>(p, PrevToken::bos(),
                                              Vec<double>::Zero(dh), hs, cands,
                                              true, true, h_out);
  CHECK(with_end.rows() == 4);

  CHECK_THROWS_AS(decoder_step<double>(p, PrevToken::bos(),
                                       Vec<double>::Zero(dh), hs,
                                       Mat<double>(dh, 0), true, false, h_out),
                  DataError);
}

TEST_CASE("decoder_step relation mode") {
  auto p = tiny_model(28);
  const int dh = p.cfg.hidden_dim;
  Mat<double> hs = encode_sentence<double>(p, {3, 4});
  Mat<double> cands = Mat<double>::Random(dh, 2);
  Vec<double> h_out(dh);

  // Zero head -> uniform over |R|.
  p.rel_head_w.value.setZero();
  p.rel_head_b.value.setZero();
  Vec<double> probs = decoder_step<double>(p, PrevToken::bos(),
                                           Vec<double>::Zero(dh), hs, cands,
                                           false, false, h_out);
  REQUIRE(probs.rows() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(probs(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }

  CHECK_THROWS_AS(decoder_step<double>(p, PrevToken::relation(99),
                                       Vec<double>::Zero(dh), hs, cands, false,
                                       false, h_out),
                  DataError);
}

TEST_CASE("parameter count matches the closed-form formula") {
  for (uint64_t seed : {31, 32}) {
    auto p = tiny_model(seed, /*vocab=*/17, /*rels=*/5);
    CHECK(p.param_count() ==
          ModelParams<double>::expected_param_count(p.cfg, 17, 5));
  }
  ModelConfig big;
  big.embed_dim = 64;
  big.hidden_dim = 128;
  big.ngram_max = 3;
  ModelParams<float> q;
  q.allocate(big, 400, 6);
  CHECK(q.param_count() ==
        ModelParams<float>::expected_param_count(big, 400, 6));
}

TEST_CASE("checkpoint round-trip is bitwise exact") {
  ModelConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 4;
  cfg.ngram_max = 2;
  ModelParams<float> p;
  p.init_random(cfg, 10, 2, 77);

  Vocabulary vocab;
  for (const char* t : {"alpha", "beta", "gamma", "delta", "eps", "zeta", "x"}) {
    vocab.add(t);
  }
  REQUIRE(vocab.size() == 10);

  auto path = (std::filesystem::temp_directory_path() / "ckpt.bed").string();
  nlohmann::json config{{"relations", {"R0", "R1"}}, {"seed", 7}};
  save_checkpoint<float>(path, p, vocab, config);

  RawCheckpoint raw = read_checkpoint(path);
  CHECK(raw.config.at("relations").size() == 2);
  auto [loaded, vocab2] = load_model<float>(raw, 2);
  CHECK(vocab2.size() == vocab.size());
  auto refs_a = p.registry();
  auto refs_b = loaded.registry();
  REQUIRE(refs_a.size() == refs_b.size());
  for (size_t i = 0; i < refs_a.size(); ++i) {
    CHECK(refs_a[i]->name == refs_b[i]->name);
    CHECK((refs_a[i]->value - refs_b[i]->value).norm() == 0.0f);
  }
  CHECK(loaded.checksum() == p.checksum());
}

TEST_CASE("checkpoint corruption raises distinct errors") {
  ModelConfig cfg;
  cfg.embed_dim = 2;
  cfg.hidden_dim = 3;
  ModelParams<float> p;
  p.init_random(cfg, 6, 2, 78);
  Vocabulary vocab;
  vocab.add("a");
  vocab.add("b");
  vocab.add("c");
  auto dir = std::filesystem::temp_directory_path();
  auto path = (dir / "ckpt_bad.bed").string();
  save_checkpoint<float>(path, p, vocab, {});

  auto data = [&] {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();

  // Bad magic.
  {
    std::string bad = data;
    bad[0] = 'X';
    auto bad_path = (dir / "ckpt_magic.bed").string();
    std::ofstream(bad_path, std::ios::binary) << bad;
    CHECK_THROWS_WITH_AS(read_checkpoint(bad_path),
                         doctest::Contains("bad checkpoint magic"), DataError);
  }
  // Truncated tensor data names the tensor.
  {
    std::string bad = data.substr(0, data.size() - 13);
    auto bad_path = (dir / "ckpt_trunc.bed").string();
    std::ofstream(bad_path, std::ios::binary) << bad;
    CHECK_THROWS_WITH_AS(read_checkpoint(bad_path),
                         doctest::Contains("truncated"), DataError);
  }
  // Dimension mismatch against the config.
  {
    RawCheckpoint raw = read_checkpoint(path);
    raw.config["hidden_dim"] = 5;
    CHECK_THROWS_WITH_AS((load_model<float>(raw, 2)),
                         doctest::Contains("dimension mismatch"), DataError);
  }
  // Missing file is an io error.
  CHECK_THROWS_AS(read_checkpoint((dir / "none.bed").string()), IoError);
}
