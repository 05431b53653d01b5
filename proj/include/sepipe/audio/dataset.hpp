#pragma once

#include <optional>

#include "sepipe/audio/mix.hpp"
#include "sepipe/audio/resample.hpp"
#include "sepipe/dsp/stft.hpp"
#include "sepipe/nn/tensor.hpp"

namespace sepipe::audio {

struct MixtureSpec {
  std::string clean_path;
  std::string noise_path;
  double snr_db = 0.0;
  uint64_t seed = 0;
};

enum class Split { train, valid, test };

struct Manifest {
  std::vector<MixtureSpec> entries;
  Split split = Split::train;
};

// Line-delimited text: `clean_path noise_path snr_db seed`, '#' comments.
// Validation resolves every path and rejects duplicate records.
Manifest load_manifest(const std::string& path, Split split = Split::train);

// One mixture rendered at the target rate.
struct RenderedPair {
  Waveform noisy;
  Waveform clean;
};
RenderedPair render_entry(const MixtureSpec& e, int target_rate_hz);

// Aligned (noisy, clean) spectrogram crops as (B,1,T,F) tensor pairs.
// valid_frames[b] < crop_frames marks an utterance that was zero-padded.
struct SpectrogramBatch {
  nn::Tensor noisy_re, noisy_im;
  nn::Tensor clean_re, clean_im;
  nn::Tensor noisy_mag, clean_mag;
  std::vector<int> valid_frames;
};

// Deterministic in (manifest, indices, crop_frames, seed): each entry's crop
// offset derives from hash(seed, entry_index), so worker parallelism cannot
// change results. The same frame window is applied to the noisy and clean
// members of a pair.
SpectrogramBatch build_batch(const Manifest& m, const std::vector<std::size_t>& indices,
                             int crop_frames, uint64_t seed, const dsp::StftParams& stft_params,
                             int target_rate_hz);

}  // namespace sepipe::audio
