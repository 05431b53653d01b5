#pragma once

#include "sepipe/models/init.hpp"
#include "sepipe/nn/attention.hpp"

namespace sepipe::models {

struct GeneratorConfig {
  std::vector<int> down_channels{32, 64, 128};
  int dra_blocks = 6;
  std::vector<int> dra_dilations{1, 2, 4, 8, 16, 32};  // along time
  int kernel_t = 3, kernel_f = 5;
  int stride_t = 1, stride_f = 2;

  void validate() const {
    require(down_channels.size() == 3, "generator: expected 3 downsampling layers");
    require(dra_blocks == static_cast<int>(dra_dilations.size()),
            "generator: one dilation per DRA block");
    for (int c : down_channels) require(c >= 1, "generator: channels must be >= 1");
  }
};

// Magnitude-to-magnitude U-Net: 3 conv+IN+PReLU+GLU downsampling layers,
// dilated residual attention blocks, and 3 mirrored upsampling layers whose
// skip connections pass through T-F attention gates. ReLU output keeps the
// estimated magnitude nonnegative and maps zero input to zero at init
// (all biases start at zero).
class Generator {
 public:
  Generator(const std::string& prefix, const GeneratorConfig& cfg, uint64_t seed);

  // mag: (B,1,T,F) nonnegative. Output has the same shape.
  nn::Var forward(nn::GradTape& t, nn::Var mag) const;

  void collect(std::vector<nn::Parameter*>& out) { params_.collect(out); }

 private:
  struct ConvBlock {  // conv/deconv -> IN -> PReLU -> GLU
    nn::Parameter* w = nullptr;
    nn::Parameter* b = nullptr;
    nn::Parameter* gamma = nullptr;
    nn::Parameter* beta = nullptr;
    nn::Parameter* alpha = nullptr;
  };
  struct DraBlock {
    ConvBlock conv;  // GLU-less: alpha used, GLU skipped
    int dilation = 1;
    nn::TfaParams sa_t, sa_f;
  };
  struct UpLayer {
    nn::TfaParams ag_t, ag_f;  // attention gate at the skip junction
    ConvBlock block;
  };

  nn::TfaParams make_tfa(const std::string& name, int channels, std::mt19937_64& rng);
  ConvBlock make_block(const std::string& name, int ci, int co_glu, int kt, int kf,
                       bool transposed, std::mt19937_64& rng);

  GeneratorConfig cfg_;
  std::vector<ConvBlock> down_;
  std::vector<DraBlock> dra_;
  std::vector<UpLayer> up_;
  ParamSet params_;
};

}  // namespace sepipe::models
