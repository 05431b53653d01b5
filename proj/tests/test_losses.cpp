#include "doctest.h"

#include <random>

#include "sepipe/losses.hpp"
#include "test_util.hpp"

using namespace sepipe;
using namespace sepipe::nn;
using testutil::rand_tensor;

namespace {

Var scores(GradTape& t, std::vector<double> v) {
  Tensor s(Shape{static_cast<int>(v.size()), 1, 1, 1});
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i];
  return t.constant(s);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("rals_d_loss on equal constant scores is exactly 2") {
  GradTape t;
  // 0.5 is exact in binary and so is the mean of four copies of it.
  Var r = scores(t, {0.5, 0.5, 0.5, 0.5});
  Var f = scores(t, {0.5, 0.5, 0.5, 0.5});
  CHECK(t.value(losses::rals_d_loss(t, r, f))[0] == 2.0);
  // Singleton batches make the mean exact for any value.
  CHECK(t.value(losses::rals_d_loss(t, scores(t, {0.7}), scores(t, {0.7})))[0] == 2.0);
}

TEST_CASE("rals_d_loss substitution cases") {
  GradTape t;
  // real 1, fake -1: (1-(-1)-1)^2 + (-1-1+1)^2 = 1 + 1
  CHECK(t.value(losses::rals_d_loss(t, scores(t, {1.0}), scores(t, {-1.0})))[0] == 2.0);
  // real 1, fake 0: the relativistic optimum for margin 1
  CHECK(t.value(losses::rals_d_loss(t, scores(t, {1.0}), scores(t, {0.0})))[0] == 0.0);
}

TEST_CASE("rals_g_loss mirrors rals_d_loss with roles swapped") {
  GradTape t;
  CHECK(t.value(losses::rals_g_loss(t, scores(t, {0.25, 0.25}), scores(t, {0.25, 0.25})))[0] ==
        2.0);
  CHECK(t.value(losses::rals_g_loss(t, scores(t, {0.0}), scores(t, {1.0})))[0] == 0.0);

  std::mt19937_64 rng(121);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor r = rand_tensor(Shape{5, 1, 1, 1}, rng);
    Tensor f = rand_tensor(Shape{5, 1, 1, 1}, rng);
    double g = t.value(losses::rals_g_loss(t, t.constant(r), t.constant(f)))[0];
    double d = t.value(losses::rals_d_loss(t, t.constant(f), t.constant(r)))[0];
    CHECK(g == d);
  }
}

TEST_CASE("empty score batches are rejected") {
  GradTape t;
  Var bad = t.constant(Tensor(Shape{1, 1, 2, 1}));  // not (B,1,1,1)
  CHECK_THROWS_AS(losses::rals_d_loss(t, bad, bad), Error);
}

TEST_CASE("cycle loss: zero at perfect reconstruction, 0.5 for constant offset") {
  std::mt19937_64 rng(122);
  GradTape t;
  Tensor x = rand_tensor(Shape{2, 1, 3, 4}, rng);
  Tensor y = rand_tensor(Shape{2, 1, 3, 4}, rng);
  Var zero = losses::cycle_loss(t, t.constant(x), t.constant(x), t.constant(y), t.constant(y));
  CHECK(t.value(zero)[0] == 0.0);

  Tensor x_off = x;
  for (std::size_t i = 0; i < x_off.size(); ++i) x_off[i] += 0.5;
  Var off = losses::cycle_loss(t, t.constant(x), t.constant(x_off), t.constant(y), t.constant(y));
  CHECK(t.value(off)[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cycle/identity losses match a direct L1 computation") {
  std::mt19937_64 rng(123);
  GradTape t;
  Tensor x = rand_tensor(Shape{2, 1, 3, 4}, rng);
  Tensor xc = rand_tensor(Shape{2, 1, 3, 4}, rng);
  Tensor y = rand_tensor(Shape{2, 1, 3, 4}, rng);
  Tensor yc = rand_tensor(Shape{2, 1, 3, 4}, rng);
  double want = 0;
  for (std::size_t i = 0; i < x.size(); ++i) want += std::abs(xc[i] - x[i]);
  double want2 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) want2 += std::abs(yc[i] - y[i]);
  want = want / static_cast<double>(x.size()) + want2 / static_cast<double>(y.size());

  Var cyc = losses::cycle_loss(t, t.constant(x), t.constant(xc), t.constant(y), t.constant(yc));
  CHECK(t.value(cyc)[0] == doctest::Approx(want).epsilon(1e-12));
  Var id = losses::identity_loss(t, t.constant(xc), t.constant(x), t.constant(yc), t.constant(y));
  CHECK(t.value(id)[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("cyclegan_total with unit components and default weights is 17") {
  GradTape t;
  losses::LossWeights w;  // lambda_cycle 5, lambda_id 10
  Var one = t.constant(Tensor::scalar(1.0));
  Var total = losses::cyclegan_total(t, one, one, one, one, w, true);
  CHECK(t.value(total)[0] == 17.0);

  Var no_id = losses::cyclegan_total(t, one, one, one, one, w, false);
  CHECK(t.value(no_id)[0] == 7.0);

  Var zero = t.constant(Tensor::scalar(0.0));
  CHECK(t.value(losses::cyclegan_total(t, zero, zero, zero, zero, w, true))[0] == 0.0);
}

TEST_CASE("dcd losses: zero at equality, sign-blind magnitude, single-cell case") {
  std::mt19937_64 rng(124);
  GradTape t;
  Tensor sr = rand_tensor(Shape{1, 1, 3, 4}, rng);
  Tensor si = rand_tensor(Shape{1, 1, 3, 4}, rng);
  CVar s{t.constant(sr), t.constant(si)};
  CHECK(t.value(losses::dcd_mag_loss(t, s, s))[0] < 1e-15);
  CHECK(t.value(losses::dcd_ri_loss(t, s, s))[0] == 0.0);

  // S_hat = -S: magnitude loss ~ 0, RI loss = 4 * mean(Sr^2) + 4 * mean(Si^2)
  Tensor nr = sr, ni = si;
  for (std::size_t i = 0; i < nr.size(); ++i) {
    nr[i] = -nr[i];
    ni[i] = -ni[i];
  }
  CVar neg{t.constant(nr), t.constant(ni)};
  CHECK(t.value(losses::dcd_mag_loss(t, neg, s))[0] < 1e-15);
  double want = 0;
  for (std::size_t i = 0; i < sr.size(); ++i) want += 4.0 * (sr[i] * sr[i] + si[i] * si[i]);
  want /= static_cast<double>(sr.size());
  CHECK(t.value(losses::dcd_ri_loss(t, neg, s))[0] == doctest::Approx(want).epsilon(1e-12));

  // single cell S_hat = 3+4j vs S = 0: mag 25, ri 25
  Tensor hr(Shape{1, 1, 1, 1});
  hr[0] = 3.0;
  Tensor hi(Shape{1, 1, 1, 1});
  hi[0] = 4.0;
  Tensor zr(Shape{1, 1, 1, 1}), zi(Shape{1, 1, 1, 1});
  CVar h{t.constant(hr), t.constant(hi)};
  CVar z{t.constant(zr), t.constant(zi)};
  // The 1e-12 magnitude floor turns |0| into 1e-6, so the square sits 1e-5
  // below the exact 25.
  CHECK(t.value(losses::dcd_mag_loss(t, h, z))[0] == doctest::Approx(25.0).epsilon(1e-5));
  CHECK(t.value(losses::dcd_ri_loss(t, h, z))[0] == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("mag loss is phase-rotation invariant; ri loss is not") {
  std::mt19937_64 rng(125);
  GradTape t;
  Tensor sr = rand_tensor(Shape{1, 1, 4, 4}, rng);
  Tensor si = rand_tensor(Shape{1, 1, 4, 4}, rng);
  // rotate each cell by a random phase, preserving magnitudes
  std::uniform_real_distribution<double> ph(-M_PI, M_PI);
  Tensor rr(sr.shape()), ri(sr.shape());
  for (std::size_t i = 0; i < sr.size(); ++i) {
    double c = std::cos(ph(rng)), s2 = std::sqrt(1 - c * c);
    rr[i] = sr[i] * c - si[i] * s2;
    ri[i] = sr[i] * s2 + si[i] * c;
  }
  Tensor refr = rand_tensor(Shape{1, 1, 4, 4}, rng);
  Tensor refi = rand_tensor(Shape{1, 1, 4, 4}, rng);
  CVar ref{t.constant(refr), t.constant(refi)};
  CVar a{t.constant(sr), t.constant(si)};
  CVar b{t.constant(rr), t.constant(ri)};
  double mag_a = t.value(losses::dcd_mag_loss(t, a, ref))[0];
  double mag_b = t.value(losses::dcd_mag_loss(t, b, ref))[0];
  CHECK(mag_a == doctest::Approx(mag_b).epsilon(1e-9));
  double ri_a = t.value(losses::dcd_ri_loss(t, a, ref))[0];
  double ri_b = t.value(losses::dcd_ri_loss(t, b, ref))[0];
  CHECK(std::abs(ri_a - ri_b) > 1e-6);
}

TEST_CASE("full_loss arithmetic and gamma = 0 decoupling") {
  GradTape t;
  Var ri = t.constant(Tensor::scalar(1.0));
  Var mag = t.constant(Tensor::scalar(1.0));
  Var gan = t.constant(Tensor::scalar(2.0));
  CHECK(t.value(losses::full_loss(t, ri, mag, gan, 0.5))[0] == 3.0);
  CHECK(t.value(losses::full_loss(t, ri, mag, gan, 0.0))[0] == 2.0);

  std::mt19937_64 rng(126);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_real_distribution<double> d(0.0, 3.0);
    double a = d(rng), b = d(rng), c = d(rng), g = d(rng);
    Var va = t.constant(Tensor::scalar(a));
    Var vb = t.constant(Tensor::scalar(b));
    Var vc = t.constant(Tensor::scalar(c));
    CHECK(t.value(losses::full_loss(t, va, vb, vc, g))[0] ==
          doctest::Approx(a + b + g * c).epsilon(1e-15));
  }
}

TEST_CASE("losses are nonnegative at representative points") {
  std::mt19937_64 rng(127);
  GradTape t;
  for (int trial = 0; trial < 10; ++trial) {
    Tensor r = rand_tensor(Shape{4, 1, 1, 1}, rng, 2.0);
    Tensor f = rand_tensor(Shape{4, 1, 1, 1}, rng, 2.0);
    CHECK(t.value(losses::rals_d_loss(t, t.constant(r), t.constant(f)))[0] >= 0.0);
    CHECK(t.value(losses::rals_g_loss(t, t.constant(r), t.constant(f)))[0] >= 0.0);
  }
}

}  // TEST_SUITE
