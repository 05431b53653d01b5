#include "sepipe/dsp/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>

#include "sepipe/png.hpp"

namespace sepipe::dsp {

namespace {

// FFTW plan creation is not thread-safe; execution of distinct plans is.
std::mutex g_plan_mutex;

class RealDft {
 public:
  explicit RealDft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    fwd_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, out_, in_, FFTW_ESTIMATE);
  }
  ~RealDft() {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealDft(const RealDft&) = delete;
  RealDft& operator=(const RealDft&) = delete;

  void forward(const double* x, std::complex<double>* spec) {
    std::memcpy(in_, x, sizeof(double) * n_);
    fftw_execute(fwd_);
    for (int k = 0; k <= n_ / 2; ++k) spec[k] = {out_[k][0], out_[k][1]};
  }

  // Unnormalized FFTW c2r divided by n, so inverse(forward(x)) == x.
  void inverse(const std::complex<double>* spec, double* x) {
    for (int k = 0; k <= n_ / 2; ++k) {
      out_[k][0] = spec[k].real();
      out_[k][1] = spec[k].imag();
    }
    fftw_execute(inv_);
    double inv_n = 1.0 / n_;
    for (int i = 0; i < n_; ++i) x[i] = in_[i] * inv_n;
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

std::vector<double> periodic_hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  return w;
}

// Reflect-pad `pad` samples at each end; the short-input case falls back to
// zero padding (reflection needs at least pad+1 samples).
std::vector<double> reflect_pad(const std::vector<double>& x, int pad) {
  std::vector<double> out(x.size() + 2 * pad, 0.0);
  std::copy(x.begin(), x.end(), out.begin() + pad);
  int n = static_cast<int>(x.size());
  for (int i = 0; i < pad; ++i) {
    int left = pad - 1 - i;
    int lsrc = i + 1;
    if (lsrc < n) out[left] = x[lsrc];
    int right = pad + n + i;
    int rsrc = n - 2 - i;
    if (rsrc >= 0) out[right] = x[rsrc];
  }
  return out;
}

}  // namespace

ComplexSpectrogram stft(const audio::Waveform& w, const StftParams& p) {
  w.validate();
  p.validate();
  const int win = p.win_len, hop = p.hop, pad = p.win_len / 2;

  std::vector<double> x = w.samples;
  if (static_cast<int>(x.size()) < win) x.resize(win, 0.0);  // at least one frame
  std::vector<double> padded = reflect_pad(x, pad);

  // Zero-extend so the frame grid covers every padded sample.
  int frames = static_cast<int>((padded.size() - win + hop - 1) / hop) + 1;
  padded.resize(static_cast<std::size_t>(frames - 1) * hop + win, 0.0);

  ComplexSpectrogram s;
  s.frames = frames;
  s.bins = p.bins();
  s.params = p;
  s.data.resize(static_cast<std::size_t>(frames) * s.bins);

  std::vector<double> window = periodic_hann(win);
  std::vector<double> buf(p.fft_len, 0.0);
  RealDft dft(p.fft_len);
  for (int t = 0; t < frames; ++t) {
    const double* src = padded.data() + static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < win; ++i) buf[i] = src[i] * window[i];
    for (int i = win; i < p.fft_len; ++i) buf[i] = 0.0;
    dft.forward(buf.data(), s.data.data() + static_cast<std::size_t>(t) * s.bins);
  }
  return s;
}

audio::Waveform istft(const ComplexSpectrogram& s, const StftParams& p, std::size_t length) {
  p.validate();
  require(s.bins == p.bins() && s.params == p, "istft: spectrogram inconsistent with params");
  require(s.frames >= 1, "istft: empty spectrogram");
  const int win = p.win_len, hop = p.hop, pad = p.win_len / 2;

  std::size_t padded_len = static_cast<std::size_t>(s.frames - 1) * hop + win;
  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> norm(padded_len, 0.0);
  std::vector<double> window = periodic_hann(win);
  std::vector<double> frame(p.fft_len);
  RealDft dft(p.fft_len);

  for (int t = 0; t < s.frames; ++t) {
    dft.inverse(s.data.data() + static_cast<std::size_t>(t) * s.bins, frame.data());
    std::size_t off = static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < win; ++i) {
      acc[off + i] += frame[i] * window[i];
      norm[off + i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < padded_len; ++i)
    if (norm[i] > 1e-12) acc[i] /= norm[i];

  std::size_t natural = padded_len >= static_cast<std::size_t>(2 * pad) ? padded_len - 2 * pad : 0;
  std::size_t out_len = length == 0 ? natural : length;
  audio::Waveform w;
  w.sample_rate_hz = 16000;  // carrier rate is not part of the spectrogram; caller overrides
  w.samples.assign(out_len, 0.0);
  for (std::size_t i = 0; i < out_len; ++i) {
    std::size_t j = i + pad;
    if (j < padded_len) w.samples[i] = acc[j];
  }
  return w;
}

std::vector<double> magnitude(const ComplexSpectrogram& s) {
  std::vector<double> m(s.data.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(s.data[i]);
  return m;
}

std::vector<double> phase(const ComplexSpectrogram& s) {
  std::vector<double> ph(s.data.size());
  for (std::size_t i = 0; i < ph.size(); ++i) {
    const auto& z = s.data[i];
    ph[i] = (z.real() == 0.0 && z.imag() == 0.0) ? 0.0 : std::atan2(z.imag(), z.real());
  }
  return ph;
}

ComplexSpectrogram polar_compose(const std::vector<double>& mag, const std::vector<double>& ph,
                                 int frames, int bins, const StftParams& p) {
  require(mag.size() == ph.size() &&
              mag.size() == static_cast<std::size_t>(frames) * static_cast<std::size_t>(bins),
          "polar_compose: size mismatch");
  ComplexSpectrogram s;
  s.frames = frames;
  s.bins = bins;
  s.params = p;
  s.data.resize(mag.size());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    require(mag[i] >= 0.0, "polar_compose: negative magnitude");
    s.data[i] = std::polar(mag[i], ph[i]);
  }
  return s;
}

void dump_csv(const ComplexSpectrogram& s, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  require_runtime(f != nullptr, "cannot open for writing: " + path);
  std::fprintf(f, "frame,bin,real,imag\n");
  for (int t = 0; t < s.frames; ++t)
    for (int b = 0; b < s.bins; ++b) {
      auto z = s.at(t, b);
      std::fprintf(f, "%d,%d,%.17g,%.17g\n", t, b, z.real(), z.imag());
    }
  std::fclose(f);
}

void dump_png(const ComplexSpectrogram& s, const std::string& path) {
  // Rows are frequency bins (low at the bottom), columns are frames.
  int w = s.frames, h = s.bins;
  std::vector<unsigned char> img(static_cast<std::size_t>(w) * h);
  std::vector<double> logmag(s.data.size());
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    logmag[i] = std::log10(std::abs(s.data[i]) + 1e-10);
    lo = std::min(lo, logmag[i]);
    hi = std::max(hi, logmag[i]);
  }
  double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  for (int t = 0; t < w; ++t)
    for (int b = 0; b < h; ++b) {
      double v = (logmag[static_cast<std::size_t>(t) * h + b] - lo) * scale;
      img[static_cast<std::size_t>(h - 1 - b) * w + t] = static_cast<unsigned char>(v);
    }
  write_png_gray8(path, img.data(), w, h);
}

}  // namespace sepipe::dsp
