#include "sepipe/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

namespace sepipe::metrics {

double ssnr(const audio::Waveform& clean, const audio::Waveform& test, int frame_len, int hop,
            double clamp_lo, double clamp_hi) {
  require(clean.samples.size() == test.samples.size() &&
              clean.sample_rate_hz == test.sample_rate_hz,
          "ssnr: signals must share length and rate");
  require(frame_len > 0 && hop > 0, "ssnr: bad framing");

  std::size_t n = clean.samples.size();
  double sum = 0;
  int count = 0;
  for (std::size_t start = 0; start + frame_len <= n || start == 0; start += hop) {
    std::size_t end = std::min(n, start + static_cast<std::size_t>(frame_len));
    double es = 0, ee = 0;
    for (std::size_t i = start; i < end; ++i) {
      double c = clean.samples[i];
      double d = c - test.samples[i];
      es += c * c;
      ee += d * d;
    }
    if (es <= 0) continue;  // silent clean frame
    double ratio = ee > 0 ? 10.0 * std::log10(es / ee) : clamp_hi;
    sum += std::clamp(ratio, clamp_lo, clamp_hi);
    ++count;
    if (end == n) break;
  }
  require(count > 0, "ssnr: all-silent clean reference");
  return sum / count;
}

double si_snr(const audio::Waveform& clean, const audio::Waveform& test) {
  require(clean.samples.size() == test.samples.size(), "si_snr: length mismatch");
  std::size_t n = clean.samples.size();
  double mc = 0, mt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mc += clean.samples[i];
    mt += test.samples[i];
  }
  mc /= static_cast<double>(n);
  mt /= static_cast<double>(n);

  double dot = 0, cc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double c = clean.samples[i] - mc;
    double t = test.samples[i] - mt;
    dot += c * t;
    cc += c * c;
  }
  require(cc > 0, "si_snr: silent clean reference");
  double scale = dot / cc;

  double et = 0, ee = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double target = scale * (clean.samples[i] - mc);
    double err = (test.samples[i] - mt) - target;
    et += target * target;
    ee += err * err;
  }
  if (et <= 0) return -100.0;
  if (ee <= 1e-20 * et) return 100.0;
  return std::clamp(10.0 * std::log10(et / ee), -100.0, 100.0);
}

EvalReport evaluate(const audio::Manifest& manifest, models::TwoStageModel& model,
                    int sample_rate_hz, const std::string& out_dir,
                    const std::string& config_echo) {
  std::filesystem::create_directories(out_dir);
  EvalReport rep;
  rep.config_echo = config_echo;

  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    audio::RenderedPair pair = audio::render_entry(manifest.entries[i], sample_rate_hz);
    audio::Waveform enhanced = models::two_stage_enhance(pair.noisy, model);

    UtteranceReport row;
    row.id = std::to_string(i);
    row.snr_in = audio::snr_db_of(pair.clean, [&] {
      audio::Waveform d = pair.noisy;
      for (std::size_t k = 0; k < d.samples.size(); ++k) d.samples[k] -= pair.clean.samples[k];
      return d;
    }());
    audio::Waveform err = enhanced;
    for (std::size_t k = 0; k < err.samples.size(); ++k) err.samples[k] -= pair.clean.samples[k];
    bool err_silent = true;
    for (double v : err.samples)
      if (v != 0.0) err_silent = false;
    row.snr_out = err_silent ? 100.0 : audio::snr_db_of(pair.clean, err);
    row.ssnr_in = ssnr(pair.clean, pair.noisy);
    row.ssnr_out = ssnr(pair.clean, enhanced);
    row.si_snr_in = si_snr(pair.clean, pair.noisy);
    row.si_snr_out = si_snr(pair.clean, enhanced);
    rep.rows.push_back(row);

    std::string base = out_dir + "/" + row.id;
    audio::save_wav(base + ".noisy.wav", pair.noisy, audio::WavEncoding::pcm16);
    audio::save_wav(base + ".enh.wav", enhanced, audio::WavEncoding::pcm16);
    audio::save_wav(base + ".clean.wav", pair.clean, audio::WavEncoding::pcm16);
  }

  auto& agg = rep.aggregate;
  agg.id = "mean";
  for (const auto& r : rep.rows) {
    agg.snr_in += r.snr_in;
    agg.snr_out += r.snr_out;
    agg.ssnr_in += r.ssnr_in;
    agg.ssnr_out += r.ssnr_out;
    agg.si_snr_in += r.si_snr_in;
    agg.si_snr_out += r.si_snr_out;
  }
  double inv = rep.rows.empty() ? 0.0 : 1.0 / static_cast<double>(rep.rows.size());
  agg.snr_in *= inv;
  agg.snr_out *= inv;
  agg.ssnr_in *= inv;
  agg.ssnr_out *= inv;
  agg.si_snr_in *= inv;
  agg.si_snr_out *= inv;
  return rep;
}

void write_report(const EvalReport& rep, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  require_runtime(f != nullptr, "cannot open report: " + path);
  std::fprintf(f, "# id snr_in snr_out ssnr_in ssnr_out si_snr_in si_snr_out\n");
  auto line = [&](const UtteranceReport& r) {
    std::fprintf(f, "%s %.6f %.6f %.6f %.6f %.6f %.6f\n", r.id.c_str(), r.snr_in, r.snr_out,
                 r.ssnr_in, r.ssnr_out, r.si_snr_in, r.si_snr_out);
  };
  for (const auto& r : rep.rows) line(r);
  line(rep.aggregate);
  std::fprintf(f, "# utterances: %zu\n", rep.rows.size());
  if (!rep.config_echo.empty()) {
    std::fprintf(f, "# config:\n");
    std::fprintf(f, "%s\n", rep.config_echo.c_str());
  }
  std::fclose(f);
}

}  // namespace sepipe::metrics
