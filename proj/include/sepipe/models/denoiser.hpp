#pragma once

#include "sepipe/models/init.hpp"
#include "sepipe/nn/complex.hpp"
#include "sepipe/nn/mask.hpp"

namespace sepipe::models {

struct DcdConfig {
  std::vector<int> encoder_channels{32, 32, 64, 64, 128, 128, 256, 256};
  int ctfsa_blocks = 6;
  int kernel_t = 3, kernel_f = 5;
  int stride_t = 1, stride_f = 2;

  void validate() const {
    require(encoder_channels.size() == 8, "dcd: expected 8 encoder layers");
    for (int c : encoder_channels) require(c >= 1, "dcd: channels must be >= 1");
  }
};

// Complex U-Net mask estimator: 8 complex conv encoder layers halving F each
// time, complex T-F self-attention blocks at the bottleneck, and 8 complex
// deconv decoder layers with skip concatenation. The final deconv maps to one
// complex channel of raw mask values, bounded into the unit disc by tanh; the
// enhanced spectrum is the input multiplied by the bounded mask.
class Denoiser {
 public:
  struct Output {
    nn::CVar mask;      // bounded CRM, |mask| < 1
    nn::CVar enhanced;  // input * mask
  };

  Denoiser(const std::string& prefix, const DcdConfig& cfg, uint64_t seed);

  // x: coarse complex spectrum, (B,1,T,F) pair.
  Output forward(nn::GradTape& t, nn::CVar x) const;

  void collect(std::vector<nn::Parameter*>& out) { params_.collect(out); }

 private:
  struct Layer {
    nn::ComplexKernel w;
    nn::Parameter* gamma_r = nullptr;
    nn::Parameter* beta_r = nullptr;
    nn::Parameter* gamma_i = nullptr;
    nn::Parameter* beta_i = nullptr;
    nn::Parameter* alpha_r = nullptr;
    nn::Parameter* alpha_i = nullptr;
    bool bare = false;  // final decoder layer: deconv only
  };

  Layer make_layer(const std::string& name, int ci, int co, bool transposed, bool bare,
                   std::mt19937_64& rng);
  nn::TfaParams make_tfa(const std::string& name, int channels, std::mt19937_64& rng);

  DcdConfig cfg_;
  std::vector<Layer> encoder_;
  std::vector<std::pair<nn::TfaParams, nn::TfaParams>> bottleneck_;
  std::vector<Layer> decoder_;
  ParamSet params_;
};

}  // namespace sepipe::models
