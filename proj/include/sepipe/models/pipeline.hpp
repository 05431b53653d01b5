#pragma once

#include <memory>

#include "sepipe/dsp/stft.hpp"
#include "sepipe/models/denoiser.hpp"
#include "sepipe/models/discriminator.hpp"
#include "sepipe/models/generator.hpp"
#include "sepipe/nn/param_store.hpp"

namespace sepipe::models {

struct ModelSpec {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  DcdConfig dcd;
  dsp::StftParams stft;
  uint64_t init_seed = 0;
};

// Both generators, both discriminators, and the complex denoiser, with all
// parameter names unique across sub-networks.
struct TwoStageModel {
  explicit TwoStageModel(const ModelSpec& spec);

  ModelSpec spec;
  Generator g_xy;  // noisy -> clean magnitude
  Generator f_yx;  // clean -> noisy magnitude
  Discriminator d_x;
  Discriminator d_y;
  Denoiser dcd;

  std::vector<nn::Parameter*> params();          // all
  std::vector<nn::Parameter*> generator_params();  // g_xy + f_yx
  std::vector<nn::Parameter*> discriminator_params();
  std::vector<nn::Parameter*> dcd_params();

  void sn_update();  // power iteration for both discriminators

  // Parameters plus spectral-norm vectors, prefixed into a store.
  void save_tensors(nn::TensorStore& store) const;
  void load_tensors(const nn::TensorStore& store);
};

// Bridges between spectrograms and (B=1,C=1,T,F) tensor pairs.
nn::Tensor spec_real(const dsp::ComplexSpectrogram& s);
nn::Tensor spec_imag(const dsp::ComplexSpectrogram& s);
nn::Tensor spec_magnitude(const dsp::ComplexSpectrogram& s);
dsp::ComplexSpectrogram tensors_to_spec(const nn::Tensor& re, const nn::Tensor& im, int batch,
                                        const dsp::StftParams& p);

struct EnhanceTrace {
  audio::Waveform enhanced;
  dsp::ComplexSpectrogram noisy_spec;
  dsp::ComplexSpectrogram stage1_spec;    // generator magnitude + noisy phase
  dsp::ComplexSpectrogram enhanced_spec;  // after the bounded CRM
};

// stft -> magnitude -> generator -> noisy phase -> denoiser -> istft.
// Output length equals input length.
audio::Waveform two_stage_enhance(const audio::Waveform& noisy, TwoStageModel& model);
EnhanceTrace two_stage_enhance_trace(const audio::Waveform& noisy, TwoStageModel& model);

}  // namespace sepipe::models
