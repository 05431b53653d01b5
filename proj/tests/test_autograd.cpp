#include "doctest.h"

#include <random>

#include "sepipe/nn/grad_check.hpp"
#include "sepipe/nn/ops.hpp"
#include "test_util.hpp"

using namespace sepipe::nn;
using testutil::rand_tensor;

TEST_SUITE("autograd") {

TEST_CASE("gradients accumulate additively at fan-out") {
  GradTape t;
  Parameter x("x", Tensor::scalar(3.0));
  Var v = t.leaf(x);
  Var y = add(t, mul(t, v, v), v);  // x^2 + x -> dy/dx = 2x + 1 = 7
  t.backward(y);
  CHECK(x.grad[0] == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("backward target must be scalar") {
  GradTape t;
  Var v = t.constant(Tensor(Shape{1, 1, 2, 2}, 1.0));
  CHECK_THROWS_AS(t.backward(v), sepipe::Error);
}

TEST_CASE("untrainable leaves receive no parameter gradient") {
  GradTape t;
  Parameter x("x", Tensor::scalar(2.0));
  Var v = t.leaf(x, /*trainable=*/false);
  Var y = mul(t, v, v);
  t.backward(y);
  CHECK(x.grad[0] == 0.0);
}

TEST_CASE("f = 0.5 * ||x||^2 has gradient x exactly") {
  std::mt19937_64 rng(61);
  Parameter x("x", rand_tensor(Shape{1, 2, 3, 4}, rng));
  GradTape t;
  Var v = t.leaf(x);
  Var y = mul_const(t, sum_all(t, mul(t, v, v)), 0.5);
  t.backward(y);
  for (std::size_t i = 0; i < x.value.size(); ++i) CHECK(x.grad[i] == x.value[i]);
}

TEST_CASE("constant function has zero gradient both ways") {
  std::mt19937_64 rng(62);
  Parameter x("x", rand_tensor(Shape{1, 1, 2, 2}, rng));
  std::vector<Parameter*> params{&x};
  auto f = [&](bool with_grad) {
    GradTape t;
    t.leaf(x);
    Var c = t.constant(Tensor::scalar(4.2));
    if (with_grad) t.backward(c);
    return t.value(c)[0];
  };
  auto rep = grad_check(f, params, 1e-4, 4, 1);
  CHECK(rep.max_rel_err == 0.0);
}

TEST_CASE("grad_check agrees with reverse mode for sum(conv2d(x, w))") {
  std::mt19937_64 rng(63);
  Parameter x("x", rand_tensor(Shape{1, 2, 5, 6}, rng));
  Parameter w("w", rand_tensor(Shape{3, 2, 3, 3}, rng, 0.5));
  std::vector<Parameter*> params{&x, &w};
  Conv2dGeom g{1, 1, 1, 1, 1, 1, 0, 0};
  auto f = [&](bool with_grad) {
    GradTape t;
    Var y = sum_all(t, conv2d(t, t.leaf(x), t.leaf(w), Var{}, g));
    if (with_grad) t.backward(y);
    return t.value(y)[0];
  };
  auto rep = grad_check(f, params, 1e-4, 16, 2);
  CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("debug checks flag non-finite forward values") {
  GradTape t;
  t.debug_checks = true;
  Tensor bad(Shape{1, 1, 1, 2});
  bad[0] = 1.0;
  bad[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(t.constant(bad), sepipe::Error);
}

TEST_CASE("mean/mse/mae backward against finite differences") {
  std::mt19937_64 rng(64);
  Parameter a("a", rand_tensor(Shape{2, 1, 3, 3}, rng));
  Parameter b("b", rand_tensor(Shape{2, 1, 3, 3}, rng));
  std::vector<Parameter*> params{&a, &b};
  for (int mode = 0; mode < 3; ++mode) {
    auto f = [&](bool with_grad) {
      GradTape t;
      Var va = t.leaf(a), vb = t.leaf(b);
      Var y = mode == 0 ? mean_all(t, mul(t, va, vb))
                        : (mode == 1 ? mse(t, va, vb) : mae(t, va, vb));
      if (with_grad) t.backward(y);
      return t.value(y)[0];
    };
    auto rep = grad_check(f, params, 1e-4, 8, 3);
    CHECK(rep.max_rel_err < 1e-6);
  }
}

TEST_CASE("ops are deterministic within a build") {
  std::mt19937_64 rng(65);
  Tensor x = rand_tensor(Shape{2, 4, 6, 8}, rng);
  Tensor w = rand_tensor(Shape{4, 4, 3, 3}, rng);
  Conv2dGeom g{1, 1, 1, 1, 1, 1, 0, 0};
  GradTape t1, t2;
  Var y1 = conv2d(t1, t1.constant(x), t1.constant(w), Var{}, g);
  Var y2 = conv2d(t2, t2.constant(x), t2.constant(w), Var{}, g);
  for (std::size_t i = 0; i < t1.value(y1).size(); ++i)
    CHECK(t1.value(y1)[i] == t2.value(y2)[i]);
}

}  // TEST_SUITE
