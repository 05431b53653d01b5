#include "doctest.h"

#include <random>

#include "sepipe/nn/attention.hpp"
#include "test_util.hpp"

using namespace sepipe::nn;
using testutil::max_abs_diff;
using testutil::rand_tensor;

namespace {

struct AttnFixture {
  std::deque<Parameter> owned;
  TfaParams params;

  AttnFixture(int c, std::mt19937_64& rng, double lambda) {
    int cq = attn_proj_channels(c);
    owned.emplace_back("wq", rand_tensor(Shape{cq, c, 1, 1}, rng, 0.5));
    owned.emplace_back("wk", rand_tensor(Shape{cq, c, 1, 1}, rng, 0.5));
    owned.emplace_back("wv", rand_tensor(Shape{c, c, 1, 1}, rng, 0.5));
    owned.emplace_back("lambda", Tensor::scalar(lambda));
    params.wq = &owned[0];
    params.wk = &owned[1];
    params.wv = &owned[2];
    params.lambda = &owned[3];
  }
};

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("lambda = 0 makes TA and FA the identity on K") {
  std::mt19937_64 rng(81);
  AttnFixture fx(8, rng, 0.0);
  GradTape t;
  Var q = t.constant(rand_tensor(Shape{2, 8, 4, 5}, rng));
  Var k = t.constant(rand_tensor(Shape{2, 8, 4, 5}, rng));
  Var v = t.constant(rand_tensor(Shape{2, 8, 4, 5}, rng));
  CHECK(max_abs_diff(t.value(temporal_attention(t, q, k, v, fx.params)), t.value(k)) == 0.0);
  CHECK(max_abs_diff(t.value(frequency_attention(t, q, k, v, fx.params)), t.value(k)) == 0.0);
}

TEST_CASE("gradient still flows to lambda at lambda = 0") {
  std::mt19937_64 rng(82);
  AttnFixture fx(8, rng, 0.0);
  GradTape t;
  Var x = t.constant(rand_tensor(Shape{1, 8, 3, 4}, rng));
  Var y = temporal_attention(t, x, x, x, fx.params);
  t.backward(mean_all(t, mul(t, y, y)));
  CHECK(fx.params.lambda->grad[0] != 0.0);
}

TEST_CASE("T = 1 rows are singleton softmax: output = lambda * V' + K") {
  std::mt19937_64 rng(83);
  AttnFixture fx(8, rng, 0.7);
  GradTape t;
  Tensor x = rand_tensor(Shape{2, 8, 1, 5}, rng);
  Var xv = t.constant(x);
  Var y = temporal_attention(t, xv, xv, xv, fx.params);
  // With T=1 the attention weight matrix is 1x1 = 1, so O = V'.
  Var vproj = conv2d(t, xv, t.leaf(*fx.params.wv), Var{}, Conv2dGeom{});
  const Tensor& vp = t.value(vproj);
  const Tensor& yv = t.value(y);
  for (std::size_t i = 0; i < yv.size(); ++i)
    CHECK(yv[i] == doctest::Approx(0.7 * vp[i] + x[i]).epsilon(1e-12));
}

TEST_CASE("attention rows sum to one on random input") {
  // Exercised through the softmax path: replicate the projection pipeline and
  // verify row-stochasticity of the weight matrix itself.
  std::mt19937_64 rng(84);
  GradTape t;
  Tensor q = rand_tensor(Shape{2, 1, 6, 3}, rng, 2.0);
  Var beta = softmax_rows(t, bmm(t, t.constant(q), t.constant(q), true));
  const Tensor& b = t.value(beta);
  for (int g = 0; g < 2; ++g)
    for (int r = 0; r < 6; ++r) {
      double s = 0;
      for (int c = 0; c < 6; ++c) s += b.at(g, 0, r, c);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("TA and FA match the independent reference implementation") {
  std::mt19937_64 rng(85);
  AttnFixture fx(16, rng, 0.45);
  GradTape t;
  Tensor q = rand_tensor(Shape{2, 16, 4, 6}, rng);
  Tensor k = rand_tensor(Shape{2, 16, 4, 6}, rng);
  Tensor v = rand_tensor(Shape{2, 16, 4, 6}, rng);
  Var ta = temporal_attention(t, t.constant(q), t.constant(k), t.constant(v), fx.params);
  Tensor want_t = testutil::ref_axis_attention(q, k, v, fx.params.wq->value, fx.params.wk->value,
                                               fx.params.wv->value, 0.45, /*over_time=*/true);
  CHECK(max_abs_diff(t.value(ta), want_t) < 1e-9);

  Var fa = frequency_attention(t, t.constant(q), t.constant(k), t.constant(v), fx.params);
  Tensor want_f = testutil::ref_axis_attention(q, k, v, fx.params.wq->value, fx.params.wk->value,
                                               fx.params.wv->value, 0.45, /*over_time=*/false);
  CHECK(max_abs_diff(t.value(fa), want_f) < 1e-9);
}

TEST_CASE("self-attention composes TA then FA and matches the reference") {
  std::mt19937_64 rng(86);
  AttnFixture fxt(8, rng, 0.3);
  AttnFixture fxf(8, rng, -0.2);
  GradTape t;
  Tensor x = rand_tensor(Shape{2, 8, 4, 6}, rng);
  Var y = tf_self_attention(t, t.constant(x), fxt.params, fxf.params);
  CHECK(t.shape(y) == x.shape());

  Tensor h = testutil::ref_axis_attention(x, x, x, fxt.params.wq->value, fxt.params.wk->value,
                                          fxt.params.wv->value, 0.3, true);
  Tensor want = testutil::ref_axis_attention(x, h, x, fxf.params.wq->value, fxf.params.wk->value,
                                             fxf.params.wv->value, -0.2, false);
  CHECK(max_abs_diff(t.value(y), want) < 1e-9);
}

TEST_CASE("self-attention with both lambdas zero is the identity") {
  std::mt19937_64 rng(87);
  AttnFixture fxt(8, rng, 0.0);
  AttnFixture fxf(8, rng, 0.0);
  GradTape t;
  Tensor x = rand_tensor(Shape{1, 8, 5, 3}, rng);
  Var y = tf_self_attention(t, t.constant(x), fxt.params, fxf.params);
  CHECK(max_abs_diff(t.value(y), x) == 0.0);
}

TEST_CASE("attention gate passes the gate at lambda = 0 and reduces to SA when skip == gate") {
  std::mt19937_64 rng(88);
  AttnFixture fxt0(8, rng, 0.0);
  AttnFixture fxf0(8, rng, 0.0);
  GradTape t;
  Tensor skip = rand_tensor(Shape{1, 8, 4, 5}, rng);
  Tensor gate = rand_tensor(Shape{1, 8, 4, 5}, rng);
  Var y0 = tf_attention_gate(t, t.constant(skip), t.constant(gate), fxt0.params, fxf0.params);
  CHECK(max_abs_diff(t.value(y0), gate) == 0.0);

  AttnFixture fxt(8, rng, 0.6);
  AttnFixture fxf(8, rng, 0.2);
  Var ag = tf_attention_gate(t, t.constant(skip), t.constant(skip), fxt.params, fxf.params);
  Var sa = tf_self_attention(t, t.constant(skip), fxt.params, fxf.params);
  CHECK(max_abs_diff(t.value(ag), t.value(sa)) == 0.0);

  AttnFixture fxt32(32, rng, 0.1);
  AttnFixture fxf32(32, rng, 0.1);
  Var shaped = tf_attention_gate(t, t.constant(rand_tensor(Shape{1, 32, 16, 21}, rng)),
                                 t.constant(rand_tensor(Shape{1, 32, 16, 21}, rng)), fxt32.params,
                                 fxf32.params);
  CHECK(t.shape(shaped) == Shape{1, 32, 16, 21});
}

TEST_CASE("batch members do not leak into each other") {
  std::mt19937_64 rng(89);
  AttnFixture fx(8, rng, 0.5);
  Tensor x = rand_tensor(Shape{2, 8, 3, 4}, rng);
  // Swap the two batch members and expect the outputs to swap identically.
  Tensor xs(Shape{2, 8, 3, 4});
  std::size_t half = x.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    xs[i] = x[half + i];
    xs[half + i] = x[i];
  }
  GradTape t;
  Var ya = temporal_attention(t, t.constant(x), t.constant(x), t.constant(x), fx.params);
  Var yb = temporal_attention(t, t.constant(xs), t.constant(xs), t.constant(xs), fx.params);
  const Tensor& a = t.value(ya);
  const Tensor& b = t.value(yb);
  for (std::size_t i = 0; i < half; ++i) {
    CHECK(a[i] == b[half + i]);
    CHECK(a[half + i] == b[i]);
  }
}

TEST_CASE("softmax inputs bounded by 1e3 stay finite") {
  std::mt19937_64 rng(90);
  AttnFixture fx(8, rng, 0.5);
  GradTape t;
  t.debug_checks = true;
  Tensor x = rand_tensor(Shape{1, 8, 4, 4}, rng, 1e3);
  Var y = temporal_attention(t, t.constant(x), t.constant(x), t.constant(x), fx.params);
  CHECK(t.value(y).all_finite());
}

}  // TEST_SUITE
