#pragma once

#include "sepipe/models/init.hpp"
#include "sepipe/nn/ops.hpp"
#include "sepipe/nn/spectral_norm.hpp"

namespace sepipe::models {

struct DiscriminatorConfig {
  std::vector<int> channels{32, 32, 64, 64, 128, 1};
  int kernel_t = 3, kernel_f = 5;  // first five layers; the last is 1x1
  int stride_t = 1, stride_f = 2;  // first five layers; the last is stride 1
  bool spectral_norm = true;

  void validate() const {
    require(channels.size() == 6, "discriminator: expected exactly six conv layers");
    for (int c : channels) require(c >= 1, "discriminator: channels must be >= 1");
  }
};

// Six spectrally normalized convolutions; PReLU after the first five. The
// (T, W) score map is averaged per sample into one scalar before the
// adversarial losses.
class Discriminator {
 public:
  Discriminator(const std::string& prefix, const DiscriminatorConfig& cfg, uint64_t seed);

  // mag: (B,1,T,F). Returns per-sample scores (B,1,1,1).
  nn::Var forward(nn::GradTape& t, nn::Var mag, bool trainable = true) const;

  // Score map before averaging, for geometry checks.
  nn::Var score_map(nn::GradTape& t, nn::Var mag, bool trainable = true) const;

  // One power iteration per conv kernel; run by the trainer before each step.
  void sn_update();

  void collect(std::vector<nn::Parameter*>& out) { params_.collect(out); }
  std::vector<nn::SpectralNorm>& sn_state() { return sn_; }

 private:
  struct Layer {
    nn::Parameter* w = nullptr;
    nn::Parameter* b = nullptr;
    nn::Parameter* alpha = nullptr;  // null on the final layer
  };

  DiscriminatorConfig cfg_;
  std::vector<Layer> layers_;
  std::vector<nn::SpectralNorm> sn_;
  ParamSet params_;
};

}  // namespace sepipe::models
