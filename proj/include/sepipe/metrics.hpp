#pragma once

#include "sepipe/audio/dataset.hpp"
#include "sepipe/models/pipeline.hpp"

namespace sepipe::metrics {

// Frame-wise clamped SNR averaged over frames with nonzero clean energy.
// Defaults: 32 ms frames, 16 ms hop, clamp [-10, 35] dB.
double ssnr(const audio::Waveform& clean, const audio::Waveform& test, int frame_len = 512,
            int hop = 256, double clamp_lo = -10.0, double clamp_hi = 35.0);

// Scale-invariant SNR with zero-mean signals and the optimal scaling
// projection; reports are capped to [-100, 100] dB.
double si_snr(const audio::Waveform& clean, const audio::Waveform& test);

struct UtteranceReport {
  std::string id;
  double snr_in = 0, snr_out = 0;
  double ssnr_in = 0, ssnr_out = 0;
  double si_snr_in = 0, si_snr_out = 0;
};

struct EvalReport {
  std::vector<UtteranceReport> rows;
  UtteranceReport aggregate;  // mean of rows
  std::string config_echo;
};

// Runs the two-stage pipeline over every manifest entry, writes
// {id}.noisy.wav / {id}.enh.wav / {id}.clean.wav into out_dir for external
// scorers, and a structured text report alongside.
EvalReport evaluate(const audio::Manifest& manifest, models::TwoStageModel& model,
                    int sample_rate_hz, const std::string& out_dir,
                    const std::string& config_echo = "");

void write_report(const EvalReport& report, const std::string& path);

}  // namespace sepipe::metrics
