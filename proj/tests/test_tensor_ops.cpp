#include "doctest.h"

#include <random>

#include "sepipe/nn/ops.hpp"
#include "test_util.hpp"

using namespace sepipe::nn;
using testutil::max_abs_diff;
using testutil::rand_tensor;

TEST_SUITE("tensor_ops") {

TEST_CASE("conv2d with a unit 1x1 kernel is the identity") {
  std::mt19937_64 rng(41);
  GradTape t;
  Var x = t.constant(rand_tensor(Shape{2, 3, 4, 5}, rng));
  Tensor w(Shape{3, 3, 1, 1});
  for (int i = 0; i < 3; ++i) w.at(i, i, 0, 0) = 1.0;
  Var y = conv2d(t, x, t.constant(w), Var{}, Conv2dGeom{});
  CHECK(max_abs_diff(t.value(y), t.value(x)) == 0.0);
}

TEST_CASE("2x2 all-ones kernel sums the entries") {
  GradTape t;
  Tensor x(Shape{1, 1, 2, 2});
  x[0] = 1;
  x[1] = 2;
  x[2] = 3;
  x[3] = 4;
  Tensor w(Shape{1, 1, 2, 2});
  w.fill(1.0);
  Var y = conv2d(t, t.constant(x), t.constant(w), Var{}, Conv2dGeom{});
  CHECK(t.shape(y) == Shape{1, 1, 1, 1});
  CHECK(t.value(y)[0] == 10.0);
}

TEST_CASE("conv2d matches the reference loop nest, incl. stride/pad/dilation") {
  std::mt19937_64 rng(42);
  struct Case {
    Shape xs, ws;
    Conv2dGeom g;
  };
  std::vector<Case> cases = {
      {{2, 3, 8, 11}, {4, 3, 3, 5}, {1, 2, 1, 2, 1, 1, 0, 0}},
      {{1, 2, 9, 7}, {3, 2, 3, 3}, {2, 2, 1, 1, 1, 1, 0, 0}},
      {{2, 1, 12, 9}, {2, 1, 3, 5}, {1, 1, 4, 2, 4, 1, 0, 0}},  // time dilation 4
      {{1, 4, 5, 161}, {4, 4, 3, 5}, {1, 2, 1, 2, 1, 1, 0, 0}},
  };
  for (const auto& c : cases) {
    GradTape t;
    Tensor x = rand_tensor(c.xs, rng);
    Tensor w = rand_tensor(c.ws, rng);
    Tensor b = rand_tensor(Shape{1, c.ws.b, 1, 1}, rng);
    Var y = conv2d(t, t.constant(x), t.constant(w), t.constant(b), c.g);
    Tensor want = testutil::ref_conv2d(x, w, &b, c.g);
    REQUIRE(t.shape(y) == want.shape());
    CHECK(max_abs_diff(t.value(y), want) < 1e-12);
  }
}

TEST_CASE("strided conv produces ceil(F/2) with (kF-1)/2 padding") {
  std::mt19937_64 rng(43);
  for (int f : {161, 81, 41, 21, 11, 6, 3, 2}) {
    GradTape t;
    Var x = t.constant(rand_tensor(Shape{1, 1, 4, f}, rng));
    Var w = t.constant(rand_tensor(Shape{1, 1, 3, 5}, rng));
    Conv2dGeom g{1, 2, 1, 2, 1, 1, 0, 0};
    Var y = conv2d(t, x, w, Var{}, g);
    CHECK(t.shape(y).f == (f + 1) / 2);
  }
}

TEST_CASE("deconv2d with a unit 1x1 kernel is the identity") {
  std::mt19937_64 rng(44);
  GradTape t;
  Var x = t.constant(rand_tensor(Shape{2, 3, 4, 5}, rng));
  Tensor w(Shape{3, 3, 1, 1});
  for (int i = 0; i < 3; ++i) w.at(i, i, 0, 0) = 1.0;
  Var y = deconv2d(t, x, t.constant(w), Var{}, Conv2dGeom{});
  CHECK(max_abs_diff(t.value(y), t.value(x)) == 0.0);
}

TEST_CASE("deconv2d is the exact adjoint of conv2d") {
  std::mt19937_64 rng(45);
  Conv2dGeom g{1, 2, 1, 2, 1, 1, 0, 0};
  Tensor x = rand_tensor(Shape{1, 2, 4, 6}, rng);
  Tensor w = rand_tensor(Shape{3, 2, 3, 5}, rng);

  GradTape t;
  Var cx = conv2d(t, t.constant(x), t.constant(w), Var{}, g);
  Tensor y = rand_tensor(t.shape(cx), rng);
  // Matched geometry: deconv output must recover x's spatial dims.
  Conv2dGeom gd = g;
  gd.out_pad_f = x.shape().f - deconv_out_dim(t.shape(cx).f, 5, g.stride_f, g.pad_f, 1, 0);
  Var dy = deconv2d(t, t.constant(y), t.constant(w), Var{}, gd);
  REQUIRE(t.shape(dy) == x.shape());

  double lhs = 0, rhs = 0;  // <conv(x), y> vs <x, deconv(y)>
  const Tensor& cxv = t.value(cx);
  for (std::size_t i = 0; i < cxv.size(); ++i) lhs += cxv[i] * y[i];
  const Tensor& dyv = t.value(dy);
  for (std::size_t i = 0; i < dyv.size(); ++i) rhs += x[i] * dyv[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("deconv2d matches the reference scatter loop nest") {
  std::mt19937_64 rng(46);
  GradTape t;
  Tensor x = rand_tensor(Shape{2, 3, 4, 6}, rng);
  Tensor w = rand_tensor(Shape{3, 2, 3, 5}, rng);
  Conv2dGeom g{1, 2, 1, 2, 1, 1, 0, 1};
  Var y = deconv2d(t, t.constant(x), t.constant(w), Var{}, g);
  Tensor want = testutil::ref_deconv2d(x, w, g);
  REQUIRE(t.shape(y) == want.shape());
  CHECK(max_abs_diff(t.value(y), want) < 1e-12);
  CHECK(t.shape(y).f == 12);  // stride-2 deconv doubles F' (with out padding)
}

TEST_CASE("instance_norm standardizes each plane") {
  std::mt19937_64 rng(47);
  GradTape t;
  Tensor x = rand_tensor(Shape{2, 3, 6, 7}, rng, 3.0);
  Tensor gamma(Shape{1, 3, 1, 1});
  gamma.fill(1.0);
  Tensor beta(Shape{1, 3, 1, 1});
  Var y = instance_norm(t, t.constant(x), t.constant(gamma), t.constant(beta), 1e-5);
  const Tensor& yv = t.value(y);
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 3; ++c) {
      double mean = 0, var = 0;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 7; ++j) mean += yv.at(b, c, i, j);
      mean /= 42.0;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 7; ++j) {
          double d = yv.at(b, c, i, j) - mean;
          var += d * d;
        }
      var /= 42.0;
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-3);
    }
}

TEST_CASE("instance_norm maps a constant plane to beta") {
  GradTape t;
  Tensor x(Shape{1, 2, 3, 4});
  x.fill(7.5);
  Tensor gamma(Shape{1, 2, 1, 1});
  gamma.fill(1.0);
  Tensor beta(Shape{1, 2, 1, 1});
  beta[0] = 0.0;
  beta[1] = -2.0;
  Var y = instance_norm(t, t.constant(x), t.constant(gamma), t.constant(beta), 1e-5);
  const Tensor& yv = t.value(y);
  for (int i = 0; i < 12; ++i) {
    CHECK(yv.at(0, 0, i / 4, i % 4) == 0.0);
    CHECK(yv.at(0, 1, i / 4, i % 4) == -2.0);
  }
}

TEST_CASE("instance_norm with eps=0 keeps an already-normalized plane") {
  GradTape t;
  Tensor x(Shape{1, 1, 1, 2});
  x[0] = -1.0;
  x[1] = 1.0;
  Tensor gamma(Shape{1, 1, 1, 1});
  gamma.fill(1.0);
  Tensor beta(Shape{1, 1, 1, 1});
  Var y = instance_norm(t, t.constant(x), t.constant(gamma), t.constant(beta), 0.0);
  CHECK(t.value(y)[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(t.value(y)[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("prelu: negative inputs scale by alpha") {
  GradTape t;
  Tensor x(Shape{1, 1, 1, 2});
  x[0] = -2.0;
  x[1] = 3.0;
  Tensor alpha(Shape{1, 1, 1, 1});
  alpha.fill(0.25);
  Var y = prelu(t, t.constant(x), t.constant(alpha));
  CHECK(t.value(y)[0] == -0.5);
  CHECK(t.value(y)[1] == 3.0);
}

TEST_CASE("glu: zero gate halves the value path; channels halve") {
  std::mt19937_64 rng(48);
  GradTape t;
  Tensor x = rand_tensor(Shape{2, 64, 3, 4}, rng);
  // zero the gate half
  for (int b = 0; b < 2; ++b)
    for (int c = 32; c < 64; ++c)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) x.at(b, c, i, j) = 0.0;
  Var y = glu(t, t.constant(x));
  CHECK(t.shape(y).c == 32);
  const Tensor& yv = t.value(y);
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 32; ++c)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
          CHECK(yv.at(b, c, i, j) == doctest::Approx(0.5 * x.at(b, c, i, j)).epsilon(1e-12));

  Tensor odd(Shape{1, 3, 2, 2});
  CHECK_THROWS_AS(glu(t, t.constant(odd)), sepipe::Error);
}

TEST_CASE("softmax rows sum to one and are overflow-safe") {
  std::mt19937_64 rng(49);
  GradTape t;
  Tensor x = rand_tensor(Shape{3, 1, 5, 8}, rng, 1e3);  // bounded by 1e3
  Var y = softmax_rows(t, x.shape().f > 0 ? t.constant(x) : Var{});
  const Tensor& yv = t.value(y);
  CHECK(yv.all_finite());
  for (int b = 0; b < 3; ++b)
    for (int r = 0; r < 5; ++r) {
      double s = 0;
      for (int f = 0; f < 8; ++f) s += yv.at(b, 0, r, f);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("permute/reshape round-trip; bmm matches naive matmul") {
  std::mt19937_64 rng(50);
  GradTape t;
  Tensor x = rand_tensor(Shape{2, 3, 4, 5}, rng);
  Var p = permute(t, t.constant(x), {0, 3, 2, 1});
  CHECK(t.shape(p) == Shape{2, 5, 4, 3});
  Var back = permute(t, p, {0, 3, 2, 1});
  CHECK(max_abs_diff(t.value(back), x) == 0.0);

  Tensor a = rand_tensor(Shape{3, 1, 4, 6}, rng);
  Tensor b = rand_tensor(Shape{3, 1, 6, 2}, rng);
  Var c = bmm(t, t.constant(a), t.constant(b));
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) {
        double acc = 0;
        for (int k = 0; k < 6; ++k) acc += a.at(g, 0, i, k) * b.at(g, 0, k, j);
        CHECK(t.value(c).at(g, 0, i, j) == doctest::Approx(acc).epsilon(1e-12));
      }

  Tensor bt = rand_tensor(Shape{3, 1, 2, 6}, rng);
  Var ct = bmm(t, t.constant(a), t.constant(bt), /*trans_b=*/true);
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) {
        double acc = 0;
        for (int k = 0; k < 6; ++k) acc += a.at(g, 0, i, k) * bt.at(g, 0, j, k);
        CHECK(t.value(ct).at(g, 0, i, j) == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("shape mismatches are rejected") {
  std::mt19937_64 rng(51);
  GradTape t;
  Var x = t.constant(rand_tensor(Shape{1, 3, 4, 5}, rng));
  Var w = t.constant(rand_tensor(Shape{2, 4, 3, 3}, rng));  // wrong Cin
  CHECK_THROWS_AS(conv2d(t, x, w, Var{}, Conv2dGeom{}), sepipe::Error);
  Var y = t.constant(rand_tensor(Shape{1, 3, 4, 4}, rng));
  CHECK_THROWS_AS(add(t, x, y), sepipe::Error);
}

}  // TEST_SUITE
