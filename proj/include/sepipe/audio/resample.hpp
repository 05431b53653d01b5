#pragma once

#include "sepipe/audio/wav.hpp"

namespace sepipe::audio {

// Windowed-sinc rate conversion with the cutoff at the lower of the two
// Nyquist frequencies. Output length is round(len * target / source).
// Equal rates return the input unchanged.
Waveform resample(const Waveform& w, int target_rate_hz);

}  // namespace sepipe::audio
