#pragma once

#include <complex>
#include <string>
#include <vector>

#include "sepipe/audio/wav.hpp"

namespace sepipe::dsp {

struct StftParams {
  int win_len = 320;  // 20 ms at 16 kHz
  int hop = 160;      // 50% overlap
  int fft_len = 320;
  // window: periodic Hann (the only supported window)

  int bins() const { return fft_len / 2 + 1; }
  void validate() const {
    require(win_len > 0 && hop > 0 && fft_len > 0, "stft: params must be positive");
    require(fft_len >= win_len, "stft: fft_len must be >= win_len");
    require(win_len % hop == 0 && win_len / hop >= 2,
            "stft: hop must divide win_len with at least 2x overlap (COLA)");
  }
  bool operator==(const StftParams& o) const {
    return win_len == o.win_len && hop == o.hop && fft_len == o.fft_len;
  }
};

// Frame-major (time outermost) one-sided complex spectrogram.
struct ComplexSpectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<std::complex<double>> data;  // frames * bins
  StftParams params;

  std::complex<double>& at(int t, int f) { return data[static_cast<std::size_t>(t) * bins + f]; }
  std::complex<double> at(int t, int f) const {
    return data[static_cast<std::size_t>(t) * bins + f];
  }
};

// Periodic Hann analysis with reflect padding of half a window at each end,
// so istft(stft(w)) has the length of w. Frame t covers padded samples
// [t*hop, t*hop + win_len).
ComplexSpectrogram stft(const audio::Waveform& w, const StftParams& p);

// Overlap-add with per-sample window-square normalization. `length` crops or
// zero-extends the result; pass 0 for the natural frame-derived length.
audio::Waveform istft(const ComplexSpectrogram& s, const StftParams& p, std::size_t length = 0);

std::vector<double> magnitude(const ComplexSpectrogram& s);  // frames*bins, row-major
std::vector<double> phase(const ComplexSpectrogram& s);      // radians; phase(0+0j) = 0

// Inverse of (magnitude, phase); magnitudes must be nonnegative.
ComplexSpectrogram polar_compose(const std::vector<double>& mag, const std::vector<double>& ph,
                                 int frames, int bins, const StftParams& p);

// Debug exports: CSV rows "frame,bin,real,imag" and a grayscale log-magnitude
// PNG scaled to the per-file min/max.
void dump_csv(const ComplexSpectrogram& s, const std::string& path);
void dump_png(const ComplexSpectrogram& s, const std::string& path);

}  // namespace sepipe::dsp
