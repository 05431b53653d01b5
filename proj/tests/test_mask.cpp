#include "doctest.h"

#include <random>

#include "sepipe/nn/mask.hpp"
#include "test_util.hpp"

using namespace sepipe;
using namespace sepipe::nn;

namespace {

dsp::ComplexSpectrogram random_spec(int frames, int bins, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  dsp::ComplexSpectrogram s;
  s.frames = frames;
  s.bins = bins;
  s.data.resize(static_cast<std::size_t>(frames) * bins);
  for (auto& z : s.data) z = {dist(rng), dist(rng)};
  return s;
}

}  // namespace

TEST_SUITE("mask") {

TEST_CASE("ideal_crm of S = X is 1 + 0j as the floor vanishes") {
  std::mt19937_64 rng(111);
  dsp::ComplexSpectrogram x = random_spec(4, 5, rng);
  dsp::ComplexSpectrogram m = ideal_crm(x, x, /*floor=*/0.0);
  for (const auto& z : m.data) {
    CHECK(z.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(z.imag()) < 1e-12);
  }
}

TEST_CASE("ideal_crm of S = 0 is 0") {
  std::mt19937_64 rng(112);
  dsp::ComplexSpectrogram x = random_spec(3, 4, rng);
  dsp::ComplexSpectrogram zero = x;
  for (auto& z : zero.data) z = 0.0;
  dsp::ComplexSpectrogram m = ideal_crm(x, zero);
  for (const auto& z : m.data) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("ideal_crm hand case: X = 2, S = 1 + 1j gives 0.5 + 0.5j") {
  dsp::ComplexSpectrogram x, s;
  x.frames = s.frames = 1;
  x.bins = s.bins = 1;
  x.data = {{2.0, 0.0}};
  s.data = {{1.0, 1.0}};
  dsp::ComplexSpectrogram m = ideal_crm(x, s, 0.0);
  CHECK(m.data[0].real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.data[0].imag() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("apply_mask(X, ideal_crm(X, S)) recovers S where X is alive") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 20; ++trial) {
    dsp::ComplexSpectrogram x = random_spec(6, 7, rng);
    dsp::ComplexSpectrogram s = random_spec(6, 7, rng);
    dsp::ComplexSpectrogram rec = apply_mask(x, ideal_crm(x, s, 0.0));
    for (std::size_t i = 0; i < s.data.size(); ++i) {
      if (std::norm(x.data[i]) <= 1e-8) continue;
      CHECK(std::abs(rec.data[i] - s.data[i]) <= 1e-9 * std::max(1.0, std::abs(s.data[i])));
    }
  }
}

TEST_CASE("bound_mask maps 0 to 0 and saturates toward magnitude 1") {
  GradTape t;
  Tensor zr(Shape{1, 1, 1, 3});
  Tensor zi(Shape{1, 1, 1, 3});
  zr[0] = 0.0;
  zi[0] = 0.0;
  zr[1] = 1.0;
  zi[1] = 0.0;   // tanh(1)
  zr[2] = 500.0;
  zi[2] = 0.0;   // saturated
  CVar m = bound_mask(t, {t.constant(zr), t.constant(zi)});
  CHECK(std::abs(t.value(m.re)[0]) < 1e-9);
  CHECK(std::abs(t.value(m.im)[0]) < 1e-9);
  CHECK(t.value(m.re)[1] == doctest::Approx(std::tanh(1.0)).epsilon(1e-9));
  CHECK(t.value(m.re)[2] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bound_mask magnitude stays below 1 for any finite input") {
  std::mt19937_64 rng(114);
  GradTape t;
  Tensor zr = testutil::rand_tensor(Shape{1, 1, 8, 9}, rng, 1e4);
  Tensor zi = testutil::rand_tensor(Shape{1, 1, 8, 9}, rng, 1e4);
  CVar m = bound_mask(t, {t.constant(zr), t.constant(zi)});
  for (std::size_t i = 0; i < zr.size(); ++i) {
    double mag = std::hypot(t.value(m.re)[i], t.value(m.im)[i]);
    CHECK(mag < 1.0);
  }
}

TEST_CASE("bound_mask preserves phase") {
  GradTape t;
  Tensor zr(Shape{1, 1, 1, 1});
  zr[0] = 3.0;
  Tensor zi(Shape{1, 1, 1, 1});
  zi[0] = 4.0;
  CVar m = bound_mask(t, {t.constant(zr), t.constant(zi)});
  double want_phase = std::atan2(4.0, 3.0);
  double got_phase = std::atan2(t.value(m.im)[0], t.value(m.re)[0]);
  CHECK(got_phase == doctest::Approx(want_phase).epsilon(1e-12));
  CHECK(std::hypot(t.value(m.re)[0], t.value(m.im)[0]) ==
        doctest::Approx(std::tanh(5.0)).epsilon(1e-9));
}

TEST_CASE("apply_mask with M = 1 is the identity; polar equals Cartesian") {
  std::mt19937_64 rng(115);
  dsp::ComplexSpectrogram x = random_spec(5, 6, rng);
  dsp::ComplexSpectrogram one = x;
  for (auto& z : one.data) z = {1.0, 0.0};
  dsp::ComplexSpectrogram y = apply_mask(x, one);
  for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == x.data[i]);

  // Dual-path check: |X| |M| e^{j(thX + thM)} vs the complex product.
  dsp::ComplexSpectrogram m = random_spec(5, 6, rng);
  dsp::ComplexSpectrogram cart = apply_mask(x, m);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    double mag = std::abs(x.data[i]) * std::abs(m.data[i]);
    double ph = std::arg(x.data[i]) + std::arg(m.data[i]);
    std::complex<double> polar = std::polar(mag, ph);
    CHECK(std::abs(polar - cart.data[i]) < 1e-9);
  }
}

TEST_CASE("tape apply_mask matches the plain spectrogram form") {
  std::mt19937_64 rng(116);
  dsp::ComplexSpectrogram x = random_spec(4, 5, rng);
  dsp::ComplexSpectrogram m = random_spec(4, 5, rng);
  dsp::ComplexSpectrogram want = apply_mask(x, m);

  GradTape t;
  Tensor xr(Shape{1, 1, 4, 5}), xi(Shape{1, 1, 4, 5}), mr(Shape{1, 1, 4, 5}), mi(Shape{1, 1, 4, 5});
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    xr[i] = x.data[i].real();
    xi[i] = x.data[i].imag();
    mr[i] = m.data[i].real();
    mi[i] = m.data[i].imag();
  }
  CVar y = apply_mask(t, {t.constant(xr), t.constant(xi)}, {t.constant(mr), t.constant(mi)});
  for (std::size_t i = 0; i < want.data.size(); ++i) {
    CHECK(t.value(y.re)[i] == doctest::Approx(want.data[i].real()).epsilon(1e-12));
    CHECK(t.value(y.im)[i] == doctest::Approx(want.data[i].imag()).epsilon(1e-12));
  }
}

}  // TEST_SUITE
