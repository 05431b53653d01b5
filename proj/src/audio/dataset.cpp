#include "sepipe/audio/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace sepipe::audio {

Manifest load_manifest(const std::string& path, Split split) {
  std::ifstream f(path);
  require(static_cast<bool>(f), "cannot open manifest: " + path);
  Manifest m;
  m.split = split;
  std::set<std::tuple<std::string, std::string, double, uint64_t>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ss(stripped);
    MixtureSpec e;
    if (!(ss >> e.clean_path)) continue;  // blank or comment-only line
    require(static_cast<bool>(ss >> e.noise_path >> e.snr_db >> e.seed),
            "manifest " + path + ":" + std::to_string(lineno) +
                ": want `clean_path noise_path snr_db seed`");
    require(is_finite(e.snr_db),
            "manifest " + path + ":" + std::to_string(lineno) + ": snr_db must be finite");
    require(std::filesystem::exists(e.clean_path),
            "manifest " + path + ":" + std::to_string(lineno) + ": missing " + e.clean_path);
    require(std::filesystem::exists(e.noise_path),
            "manifest " + path + ":" + std::to_string(lineno) + ": missing " + e.noise_path);
    require(seen.insert({e.clean_path, e.noise_path, e.snr_db, e.seed}).second,
            "manifest " + path + ":" + std::to_string(lineno) + ": duplicate record");
    m.entries.push_back(std::move(e));
  }
  require(!m.entries.empty(), "manifest " + path + ": no entries");
  return m;
}

RenderedPair render_entry(const MixtureSpec& e, int target_rate_hz) {
  Waveform clean = resample(load_wav(e.clean_path), target_rate_hz);
  Waveform noise = resample(load_wav(e.noise_path), target_rate_hz);
  MixResult mix = mix_at_snr(clean, noise, e.snr_db, e.seed);
  return {std::move(mix.noisy), std::move(clean)};
}

SpectrogramBatch build_batch(const Manifest& m, const std::vector<std::size_t>& indices,
                             int crop_frames, uint64_t seed, const dsp::StftParams& stft_params,
                             int target_rate_hz) {
  require(!indices.empty(), "build_batch: empty indices");
  require(crop_frames >= 1, "build_batch: crop_frames must be >= 1");

  int B = static_cast<int>(indices.size());
  int F = stft_params.bins();
  nn::Shape s{B, 1, crop_frames, F};
  SpectrogramBatch batch{nn::Tensor(s), nn::Tensor(s), nn::Tensor(s), nn::Tensor(s),
                         nn::Tensor(s), nn::Tensor(s), {}};
  batch.valid_frames.resize(static_cast<std::size_t>(B));

  for (int b = 0; b < B; ++b) {
    std::size_t idx = indices[static_cast<std::size_t>(b)];
    require(idx < m.entries.size(), "build_batch: index out of range");
    RenderedPair pair = render_entry(m.entries[idx], target_rate_hz);
    dsp::ComplexSpectrogram noisy = dsp::stft(pair.noisy, stft_params);
    dsp::ComplexSpectrogram clean = dsp::stft(pair.clean, stft_params);

    int frames = noisy.frames;
    int start = 0;
    int copy = std::min(frames, crop_frames);
    if (frames > crop_frames) {
      std::mt19937_64 rng(seed_stream(seed, idx));
      start = static_cast<int>(
          std::uniform_int_distribution<int>(0, frames - crop_frames)(rng));
    }
    batch.valid_frames[static_cast<std::size_t>(b)] = copy;

    for (int t = 0; t < copy; ++t)
      for (int k = 0; k < F; ++k) {
        auto zn = noisy.at(start + t, k);
        auto zc = clean.at(start + t, k);
        batch.noisy_re.at(b, 0, t, k) = zn.real();
        batch.noisy_im.at(b, 0, t, k) = zn.imag();
        batch.clean_re.at(b, 0, t, k) = zc.real();
        batch.clean_im.at(b, 0, t, k) = zc.imag();
        batch.noisy_mag.at(b, 0, t, k) = std::abs(zn);
        batch.clean_mag.at(b, 0, t, k) = std::abs(zc);
      }
  }
  return batch;
}

}  // namespace sepipe::audio
