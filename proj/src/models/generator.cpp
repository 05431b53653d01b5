#include "sepipe/models/generator.hpp"

namespace sepipe::models {

using namespace sepipe::nn;

TfaParams Generator::make_tfa(const std::string& name, int channels, std::mt19937_64& rng) {
  int cq = attn_proj_channels(channels);
  TfaParams p;
  p.wq = &params_.add(name + ".wq", conv_kernel_init(cq, channels, 1, 1, rng));
  p.wk = &params_.add(name + ".wk", conv_kernel_init(cq, channels, 1, 1, rng));
  p.wv = &params_.add(name + ".wv", conv_kernel_init(channels, channels, 1, 1, rng));
  p.lambda = &params_.add(name + ".lambda", Tensor::scalar(0.0));
  return p;
}

Generator::ConvBlock Generator::make_block(const std::string& name, int ci, int co_glu, int kt,
                                           int kf, bool transposed, std::mt19937_64& rng) {
  ConvBlock b;
  int co = 2 * co_glu;  // GLU halves the channel count
  b.w = &params_.add(name + ".w", transposed ? deconv_kernel_init(ci, co, kt, kf, rng)
                                             : conv_kernel_init(co, ci, kt, kf, rng));
  b.b = &params_.add(name + ".b", channel_vec(co, 0.0));
  b.gamma = &params_.add(name + ".gamma", channel_vec(co, 1.0));
  b.beta = &params_.add(name + ".beta", channel_vec(co, 0.0));
  b.alpha = &params_.add(name + ".alpha", channel_vec(co, 0.25));
  return b;
}

Generator::Generator(const std::string& prefix, const GeneratorConfig& cfg, uint64_t seed)
    : cfg_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  int kt = cfg.kernel_t, kf = cfg.kernel_f;

  int ci = 1;
  for (std::size_t i = 0; i < cfg.down_channels.size(); ++i) {
    down_.push_back(make_block(prefix + ".down" + std::to_string(i), ci, cfg.down_channels[i],
                               kt, kf, /*transposed=*/false, rng));
    ci = cfg.down_channels[i];
  }

  int c_mid = cfg.down_channels.back();
  for (int i = 0; i < cfg.dra_blocks; ++i) {
    DraBlock blk;
    std::string name = prefix + ".dra" + std::to_string(i);
    blk.dilation = cfg.dra_dilations[static_cast<std::size_t>(i)];
    blk.conv.w = &params_.add(name + ".w", conv_kernel_init(c_mid, c_mid, kt, kf, rng));
    blk.conv.b = &params_.add(name + ".b", channel_vec(c_mid, 0.0));
    blk.conv.gamma = &params_.add(name + ".gamma", channel_vec(c_mid, 1.0));
    blk.conv.beta = &params_.add(name + ".beta", channel_vec(c_mid, 0.0));
    blk.conv.alpha = &params_.add(name + ".alpha", channel_vec(c_mid, 0.25));
    blk.sa_t = make_tfa(name + ".sa_t", c_mid, rng);
    blk.sa_f = make_tfa(name + ".sa_f", c_mid, rng);
    dra_.push_back(blk);
  }

  // Mirror: channel path c3 -> c2 -> c1 -> 1.
  for (std::size_t i = 0; i < cfg.down_channels.size(); ++i) {
    std::size_t lvl = cfg.down_channels.size() - 1 - i;  // 2, 1, 0
    int cin = cfg.down_channels[lvl];
    int cout = lvl == 0 ? 1 : cfg.down_channels[lvl - 1];
    UpLayer up;
    std::string name = prefix + ".up" + std::to_string(lvl);
    up.ag_t = make_tfa(name + ".ag_t", cin, rng);
    up.ag_f = make_tfa(name + ".ag_f", cin, rng);
    up.block = make_block(name, cin, cout, kt, kf, /*transposed=*/true, rng);
    up_.push_back(up);
  }
}

Var Generator::forward(GradTape& t, Var mag) const {
  Shape s = t.shape(mag);
  require(s.c == 1, "generator: expected a single input channel, got " + std::to_string(s.c));

  int kt = cfg_.kernel_t, kf = cfg_.kernel_f;
  Conv2dGeom down_geom;
  down_geom.stride_t = cfg_.stride_t;
  down_geom.stride_f = cfg_.stride_f;
  down_geom.pad_t = (kt - 1) / 2;
  down_geom.pad_f = (kf - 1) / 2;

  // Downsampling stack; skips recorded after the full conv-IN-PReLU-GLU block.
  std::vector<Var> skips;
  std::vector<int> f_dims;  // input F of each down layer, for the mirrored deconv
  Var h = mag;
  for (const ConvBlock& blk : down_) {
    f_dims.push_back(t.shape(h).f);
    Var c = conv2d(t, h, t.leaf(*blk.w), t.leaf(*blk.b), down_geom);
    c = instance_norm(t, c, t.leaf(*blk.gamma), t.leaf(*blk.beta));
    c = prelu(t, c, t.leaf(*blk.alpha));
    h = glu(t, c);
    skips.push_back(h);
  }

  for (const DraBlock& blk : dra_) {
    Conv2dGeom g;
    g.dil_t = blk.dilation;
    g.pad_t = blk.dilation * (kt - 1) / 2;
    g.pad_f = (kf - 1) / 2;
    Var c = conv2d(t, h, t.leaf(*blk.conv.w), t.leaf(*blk.conv.b), g);
    c = instance_norm(t, c, t.leaf(*blk.conv.gamma), t.leaf(*blk.conv.beta));
    c = prelu(t, c, t.leaf(*blk.conv.alpha));
    h = add(t, h, c);  // dilated residual
    h = tf_self_attention(t, h, blk.sa_t, blk.sa_f);
  }

  for (std::size_t i = 0; i < up_.size(); ++i) {
    const UpLayer& up = up_[i];
    std::size_t lvl = up_.size() - 1 - i;
    Var gated = tf_attention_gate(t, skips[lvl], h, up.ag_t, up.ag_f);
    Conv2dGeom g = down_geom;
    int f_target = f_dims[lvl];
    g.out_pad_f =
        f_target - deconv_out_dim(t.shape(gated).f, kf, g.stride_f, g.pad_f, g.dil_f, 0);
    require(g.out_pad_f >= 0 && g.out_pad_f <= 1, "generator: inconsistent upsample geometry");
    Var c = deconv2d(t, gated, t.leaf(*up.block.w), t.leaf(*up.block.b), g);
    c = instance_norm(t, c, t.leaf(*up.block.gamma), t.leaf(*up.block.beta));
    c = prelu(t, c, t.leaf(*up.block.alpha));
    h = glu(t, c);
  }

  require(t.shape(h) == s, "generator: output shape drifted to " + t.shape(h).str());
  return relu_op(t, h);  // nonnegative magnitude
}

}  // namespace sepipe::models
