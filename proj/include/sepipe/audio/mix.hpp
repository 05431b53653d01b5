#pragma once

#include <cstdint>
#include <utility>

#include "sepipe/audio/wav.hpp"

namespace sepipe::audio {

struct MixResult {
  Waveform noisy;       // clean + noise_used, sample for sample
  Waveform noise_used;  // the scaled noise segment that was added
};

// Scales a seeded random contiguous cut of `noise` so that the clean-to-noise
// power ratio equals snr_db exactly (powers are mean squares over the clean
// extent), then adds it to `clean`. Noise shorter than the clean utterance is
// tiled before cutting. Zero-power clean or noise segments are rejected.
MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db, uint64_t seed);

// 10*log10(P_clean / P_noise) of two aligned signals.
double snr_db_of(const Waveform& clean, const Waveform& noise);

}  // namespace sepipe::audio
