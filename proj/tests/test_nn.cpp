#include <doctest.h>

#include <cmath>

#include "bed/adam.hpp"
#include "bed/block_checks.hpp"
#include "bed/gradcheck.hpp"
#include "bed/nn.hpp"
#include "bed/rng.hpp"

using namespace bed;

namespace {

GruParams<double> zero_gru(int d_in, int d_h) {
  GruParams<double> p;
  p.init("g", d_in, d_h);
  return p;
}

}  // namespace

TEST_CASE("gru_cell analytic cases") {
  auto p = zero_gru(2, 2);
  Vec<double> x = Vec<double>::Zero(2);
  Vec<double> h0 = Vec<double>::Zero(2);

  // Zero fixed point.
  CHECK(gru_cell<double>(p, x, h0).norm() == 0.0);

  // Zero weights, h_prev = v: z = 0.5, g = 0 -> h' = 0.5 v.
  Vec<double> v(2);
  v << 0.4, -1.2;
  Vec<double> h = gru_cell<double>(p, x, v);
  CHECK(h(0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(h(1) == doctest::Approx(-0.6).epsilon(1e-12));

  // Scalar case with all weights 1, biases 0, x = h_prev = 1:
  //   z = r = sigmoid(2), g = tanh(1 + z... ) evaluated step by step below.
  auto sp = zero_gru(1, 1);
  for (auto* t : {&sp.wz, &sp.uz, &sp.wr, &sp.ur, &sp.wh, &sp.uh}) {
    t->value(0, 0) = 1.0;
  }
  Vec<double> one = Vec<double>::Ones(1);
  const double zg = 1.0 / (1.0 + std::exp(-2.0));
  const double rg = zg;
  const double gg = std::tanh(1.0 + rg * 1.0);
  const double expected = (1.0 - zg) * 1.0 + zg * gg;
  CHECK(gru_cell<double>(sp, one, one)(0) ==
        doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(gru_cell<double>(sp, Vec<double>::Zero(3), one), DataError);
}

TEST_CASE("gru hidden states stay inside the h_prev/tanh hull") {
  GruParams<double> p;
  p.init("g", 3, 4);
  ParamRefs<double> refs;
  p.collect(refs);
  init_uniform<double>(refs, 42);
  auto rng = make_rng(43, 0);
  Vec<double> h = Vec<double>::Zero(4);
  for (int t = 0; t < 20; ++t) {
    Vec<double> x(3);
    for (int i = 0; i < 3; ++i) x(i) = next_uniform(rng, -2.0, 2.0);
    Vec<double> h_new = gru_cell<double>(p, x, h);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(h_new(i)) <= std::max(std::abs(h(i)), 1.0) + 1e-12);
    }
    h = h_new;
  }
}

TEST_CASE("run_gru unrolls gru_cell") {
  GruParams<double> p;
  p.init("g", 2, 3);
  ParamRefs<double> refs;
  p.collect(refs);
  init_uniform<double>(refs, 7);
  Mat<double> seq(2, 2);
  seq << 0.3, -0.5, 0.8, 0.1;
  Vec<double> h0 = Vec<double>::Zero(3);

  Mat<double> hs = run_gru<double>(p, seq, h0);
  Vec<double> h1 = gru_cell<double>(p, seq.col(0), h0);
  Vec<double> h2 = gru_cell<double>(p, seq.col(1), h1);
  CHECK((hs.col(0) - h1).norm() == 0.0);
  CHECK((hs.col(1) - h2).norm() == 0.0);

  // Zero params, zero h0 -> all rows zero.
  auto zp = zero_gru(2, 3);
  CHECK(run_gru<double>(zp, seq, h0).norm() == 0.0);

  CHECK_THROWS_AS(run_gru<double>(p, Mat<double>(2, 0), h0), DataError);
}

TEST_CASE("batched gru matches the sequential path on variable lengths") {
  GruParams<double> p;
  p.init("g", 3, 4);
  ParamRefs<double> refs;
  p.collect(refs);
  init_uniform<double>(refs, 11);

  std::vector<std::vector<Vec<double>>> seqs;
  auto rng = make_rng(12, 0);
  std::vector<int> lengths = {3, 1, 4, 2};
  const int t_max = 4;
  std::vector<Mat<double>> xs(t_max);
  for (int t = 0; t < t_max; ++t) xs[t] = Mat<double>::Zero(3, 4);
  for (size_t i = 0; i < lengths.size(); ++i) {
    std::vector<Vec<double>> seq;
    for (int t = 0; t < lengths[i]; ++t) {
      Vec<double> x(3);
      for (int k = 0; k < 3; ++k) x(k) = next_uniform(rng, -1.0, 1.0);
      xs[t].col(static_cast<Eigen::Index>(i)) = x;
      seq.push_back(x);
    }
    seqs.push_back(seq);
  }
  Mat<double> finals = run_gru_batch<double>(p, xs, lengths);
  for (size_t i = 0; i < lengths.size(); ++i) {
    Mat<double> seq(3, lengths[i]);
    for (int t = 0; t < lengths[i]; ++t) seq.col(t) = seqs[i][t];
    Mat<double> hs = run_gru<double>(p, seq, Vec<double>::Zero(4));
    CHECK((finals.col(static_cast<Eigen::Index>(i)) -
           hs.col(lengths[i] - 1))
              .norm() < 1e-12);
  }
}

TEST_CASE("mean_pool") {
  Mat<double> h(2, 2);
  h << 1, 3, 3, 5;
  Vec<double> m = mean_pool<double>(h);
  CHECK(m(0) == doctest::Approx(2.0));
  CHECK(m(1) == doctest::Approx(4.0));

  Mat<double> single(3, 1);
  single << 1, 2, 3;
  CHECK((mean_pool<double>(single) - single.col(0)).norm() == 0.0);

  Mat<double> same(2, 3);
  same << 7, 7, 7, -2, -2, -2;
  CHECK(mean_pool<double>(same)(0) == doctest::Approx(7.0));
  CHECK(mean_pool<double>(same)(1) == doctest::Approx(-2.0));

  CHECK_THROWS_AS(mean_pool<double>(Mat<double>(2, 0)), DataError);
}

TEST_CASE("softmax") {
  Vec<double> equal = Vec<double>::Constant(4, 1.7);
  Vec<double> p = softmax<double>(equal);
  for (int i = 0; i < 4; ++i) CHECK(p(i) == doctest::Approx(0.25).epsilon(1e-12));

  Vec<double> s(2);
  s << 0.0, std::log(3.0);
  Vec<double> q = softmax<double>(s);
  CHECK(q(0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(q(1) == doctest::Approx(0.75).epsilon(1e-12));

  // Shift invariance and normalization.
  Vec<double> shifted = (s.array() + 123.456).matrix();
  CHECK((softmax<double>(shifted) - q).norm() < 1e-12);
  CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-12));

  // Large scores stay finite through the max shift.
  Vec<double> big(2);
  big << 1000.0, 999.0;
  CHECK(std::isfinite(softmax<double>(big)(0)));
}

TEST_CASE("cross_entropy") {
  Vec<double> perfect(3);
  perfect << 0.0, 1.0, 0.0;
  CHECK(cross_entropy<double>(perfect, 1) == 0.0);

  Vec<double> uniform = Vec<double>::Constant(5, 0.2);
  CHECK(cross_entropy<double>(uniform, 2) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));

  Vec<double> quarter(2);
  quarter << 0.25, 0.75;
  CHECK(cross_entropy<double>(quarter, 0) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // Floor keeps the loss finite at p = 0.
  CHECK(std::isfinite(cross_entropy<double>(perfect, 0)));
  CHECK(cross_entropy<double>(perfect, 0) >= 0.0);
  CHECK_THROWS_AS(cross_entropy<double>(perfect, 3), DataError);
  CHECK_THROWS_AS(cross_entropy<double>(perfect, -1), DataError);
}

TEST_CASE("adam single steps") {
  ParamTensor<double> w{"w", {}, {}};
  w.resize(1, 1);
  ParamRefs<double> refs{&w};
  AdamState<double> adam;
  adam.reset(refs);

  // Zero gradient -> no movement.
  adam.step(refs);
  CHECK(w.value(0, 0) == 0.0);

  // One unit-gradient step moves by ~ -lr.
  adam.reset(refs);
  w.grad(0, 0) = 1.0;
  adam.step(refs);
  CHECK(w.value(0, 0) ==
        doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-9));
  // Gradient was consumed.
  CHECK(w.grad(0, 0) == 0.0);
}

TEST_CASE("adam is deterministic across runs") {
  auto run = [](uint64_t seed) {
    ParamTensor<double> w{"w", {}, {}};
    w.resize(3, 3);
    ParamRefs<double> refs{&w};
    init_uniform<double>(refs, seed);
    AdamState<double> adam;
    adam.reset(refs);
    auto rng = make_rng(seed, 5);
    for (int it = 0; it < 25; ++it) {
      for (int i = 0; i < 9; ++i) {
        w.grad.data()[i] = next_uniform(rng, -1.0, 1.0);
      }
      adam.step(refs);
    }
    return w.value;
  };
  Mat<double> a = run(3);
  Mat<double> b = run(3);
  CHECK((a - b).norm() == 0.0);
}

TEST_CASE("gradient clipping") {
  ParamTensor<double> w{"w", {}, {}};
  w.resize(2, 1);
  ParamRefs<double> refs{&w};
  w.grad << 3.0, 4.0;  // norm 5
  CHECK(clip_gradients<double>(refs, 10.0) == doctest::Approx(5.0));
  CHECK(w.grad(0, 0) == doctest::Approx(3.0));
  CHECK(clip_gradients<double>(refs, 1.0) == doctest::Approx(5.0));
  CHECK(std::sqrt(w.grad.squaredNorm()) == doctest::Approx(1.0));
}

TEST_CASE("grad_check flags a broken gradient and accepts a linear one") {
  ParamTensor<double> w{"w", {}, {}};
  w.resize(3, 1);
  ParamRefs<double> refs{&w};
  init_uniform<double>(refs, 9);
  Vec<double> a(3);
  a << 0.5, -1.0, 2.0;

  auto linear = [&](bool with_grad) {
    if (with_grad) w.grad.col(0) += a;
    return a.dot(w.value.col(0));
  };
  CHECK(grad_check(refs, linear, 1e-5).max_rel_err < 1e-9);

  auto broken = [&](bool with_grad) {
    if (with_grad) w.grad.col(0) += 2.0 * a;  // wrong by a factor of 2
    return a.dot(w.value.col(0));
  };
  CHECK(grad_check(refs, broken, 1e-5).max_rel_err > 0.1);

  CHECK_THROWS_AS(grad_check(refs, linear, 1e-2), DataError);
}

TEST_CASE("all differentiable blocks pass the finite-difference check") {
  auto results = run_block_checks(/*dims=*/4, /*n_seeds=*/3);
  REQUIRE(results.size() == 6);
  for (const auto& r : results) {
    INFO(r.block, " worst at ", r.report.worst_param);
    CHECK(r.report.max_rel_err < 1e-5);
  }
}
