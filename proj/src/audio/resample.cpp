#include "sepipe/audio/resample.hpp"

#include <cmath>
#include <numeric>

namespace sepipe::audio {

namespace {

constexpr int kSincZeros = 16;  // zero crossings on each side at the cutoff rate

double blackman(double u) {
  // u in [-1, 1]
  return 0.42 + 0.5 * std::cos(M_PI * u) + 0.08 * std::cos(2.0 * M_PI * u);
}

}  // namespace

Waveform resample(const Waveform& w, int target_rate_hz) {
  w.validate();
  require(target_rate_hz > 0, "resample: target rate must be positive");
  if (target_rate_hz == w.sample_rate_hz) return w;

  const int src = w.sample_rate_hz;
  const int tgt = target_rate_hz;
  const int g = std::gcd(src, tgt);
  const int64_t up = tgt / g;    // output samples per...
  const int64_t down = src / g;  // ...this many input samples

  const std::size_t in_len = w.samples.size();
  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(in_len) * tgt / src));

  // Anti-aliasing/anti-imaging cutoff at the lower Nyquist, normalized to the
  // input rate. Support widens by 1/cutoff when downsampling.
  const double cutoff = std::min(1.0, static_cast<double>(tgt) / src);
  const double half_width = kSincZeros / cutoff;

  Waveform out;
  out.sample_rate_hz = tgt;
  out.samples.resize(out_len, 0.0);

  for (std::size_t n = 0; n < out_len; ++n) {
    // Exact rational center: c = n * down / up input samples.
    const int64_t num = static_cast<int64_t>(n) * down;
    const int64_t c_int = num / up;
    const double c_frac = static_cast<double>(num % up) / static_cast<double>(up);
    const double c = static_cast<double>(c_int) + c_frac;

    int64_t k_lo = static_cast<int64_t>(std::ceil(c - half_width));
    int64_t k_hi = static_cast<int64_t>(std::floor(c + half_width));
    k_lo = std::max<int64_t>(k_lo, 0);
    k_hi = std::min<int64_t>(k_hi, static_cast<int64_t>(in_len) - 1);

    double acc = 0.0;
    for (int64_t k = k_lo; k <= k_hi; ++k) {
      const double x = static_cast<double>(k) - c;
      const double sx = cutoff * x;
      const double sinc = sx == 0.0 ? 1.0 : std::sin(M_PI * sx) / (M_PI * sx);
      acc += w.samples[static_cast<std::size_t>(k)] * cutoff * sinc * blackman(x / half_width);
    }
    out.samples[n] = acc;
  }
  return out;
}

}  // namespace sepipe::audio
