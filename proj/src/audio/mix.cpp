#include "sepipe/audio/mix.hpp"

#include <cmath>
#include <random>

namespace sepipe::audio {

namespace {

double mean_square(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double snr_db_of(const Waveform& clean, const Waveform& noise) {
  require(clean.samples.size() == noise.samples.size(), "snr_db_of: length mismatch");
  double pc = mean_square(clean.samples);
  double pn = mean_square(noise.samples);
  require(pc > 0 && pn > 0, "snr_db_of: degenerate power");
  return 10.0 * std::log10(pc / pn);
}

MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db, uint64_t seed) {
  clean.validate();
  noise.validate();
  require(clean.sample_rate_hz == noise.sample_rate_hz,
          "mix_at_snr: sample rates differ (" + std::to_string(clean.sample_rate_hz) + " vs " +
              std::to_string(noise.sample_rate_hz) + ")");
  require(is_finite(snr_db), "mix_at_snr: snr_db must be finite");

  const std::size_t n = clean.samples.size();

  // Tile short noise, then take a seeded random contiguous cut.
  std::vector<double> pool = noise.samples;
  while (pool.size() < n) pool.insert(pool.end(), noise.samples.begin(), noise.samples.end());

  std::mt19937_64 rng(seed);
  std::size_t max_off = pool.size() - n;
  std::size_t off = max_off == 0 ? 0 : std::uniform_int_distribution<std::size_t>(0, max_off)(rng);

  std::vector<double> cut(pool.begin() + static_cast<std::ptrdiff_t>(off),
                          pool.begin() + static_cast<std::ptrdiff_t>(off + n));

  const double p_clean = mean_square(clean.samples);
  const double p_noise = mean_square(cut);
  require(p_clean > 0.0, "mix_at_snr: degenerate power (silent clean)");
  require(p_noise > 0.0, "mix_at_snr: degenerate power (silent noise cut)");

  const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

  MixResult r;
  r.noise_used.sample_rate_hz = clean.sample_rate_hz;
  r.noise_used.samples.resize(n);
  r.noisy.sample_rate_hz = clean.sample_rate_hz;
  r.noisy.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.noise_used.samples[i] = gain * cut[i];
    r.noisy.samples[i] = clean.samples[i] + r.noise_used.samples[i];
  }
  return r;
}

}  // namespace sepipe::audio
