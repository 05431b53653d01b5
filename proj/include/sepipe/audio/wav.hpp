#pragma once

#include <string>
#include <vector>

#include "sepipe/common.hpp"

namespace sepipe::audio {

// Mono sample sequence, amplitudes nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  void validate() const {
    require(!samples.empty(), "waveform: empty sample sequence");
    require(sample_rate_hz > 0, "waveform: sample rate must be positive");
    for (double s : samples)
      require(is_finite(s), "waveform: non-finite sample");
  }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

enum class WavEncoding { pcm16, float32 };

// Reads a mono RIFF WAV (16-bit PCM or 32-bit IEEE float). PCM samples are
// scaled by 1/32768. Unreadable files, multi-channel audio, and other
// encodings are reported as distinct errors.
Waveform load_wav(const std::string& path);

void save_wav(const std::string& path, const Waveform& w,
              WavEncoding enc = WavEncoding::float32);

}  // namespace sepipe::audio
