#include "doctest.h"

#include <random>

#include "sepipe/nn/spectral_norm.hpp"
#include "test_util.hpp"

using namespace sepipe::nn;

TEST_SUITE("spectral_norm") {

TEST_CASE("diag(3,1) is divided by sigma ~ 3 after a few iterations") {
  Tensor w(Shape{2, 2, 1, 1});
  w.at(0, 0, 0, 0) = 3.0;
  w.at(1, 1, 0, 0) = 1.0;
  std::mt19937_64 rng(71);
  SpectralNorm sn(w, rng);
  for (int i = 0; i < 5; ++i) sn.update(w);
  CHECK(sn.sigma(w) == doctest::Approx(3.0).epsilon(1e-6));

  GradTape t;
  Var y = sn.apply(t, t.constant(w));
  CHECK(t.value(y).at(0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(t.value(y).at(1, 1, 0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("kernel with unit spectral norm passes through unchanged") {
  Tensor w(Shape{2, 2, 1, 1});
  w.at(0, 0, 0, 0) = 1.0;
  w.at(1, 1, 0, 0) = 0.25;
  std::mt19937_64 rng(72);
  SpectralNorm sn(w, rng);
  for (int i = 0; i < 20; ++i) sn.update(w);
  GradTape t;
  Var y = sn.apply(t, t.constant(w));
  CHECK(t.value(y).at(0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(t.value(y).at(1, 1, 0, 0) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("scaling the kernel by 10 leaves the normalized kernel invariant") {
  std::mt19937_64 rng(73);
  Tensor w = testutil::rand_tensor(Shape{4, 3, 3, 3}, rng);
  Tensor w10 = w;
  for (std::size_t i = 0; i < w10.size(); ++i) w10[i] *= 10.0;

  SpectralNorm sn(w, rng);
  for (int i = 0; i < 30; ++i) sn.update(w);
  SpectralNorm sn10 = sn;
  sn10.update(w10);  // power iteration is itself scale-invariant

  GradTape t;
  Var a = sn.apply(t, t.constant(w));
  Var b = sn10.apply(t, t.constant(w10));
  CHECK(testutil::max_abs_diff(t.value(a), t.value(b)) < 1e-9);
}

TEST_CASE("sigma estimate converges to the true largest singular value") {
  // [[2, 1], [0, 1]]: W^T W has eigenvalues 3 +- sqrt(5).
  Tensor w(Shape{2, 2, 1, 1});
  w.at(0, 0, 0, 0) = 2.0;
  w.at(0, 1, 0, 0) = 1.0;
  w.at(1, 1, 0, 0) = 1.0;
  double want = std::sqrt(3.0 + std::sqrt(5.0));
  std::mt19937_64 rng(74);
  SpectralNorm sn(w, rng);
  for (int i = 0; i < 50; ++i) sn.update(w);
  CHECK(sn.sigma(w) == doctest::Approx(want).epsilon(1e-9));
}

}  // TEST_SUITE
