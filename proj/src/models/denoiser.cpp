#include "sepipe/models/denoiser.hpp"

namespace sepipe::models {

using namespace sepipe::nn;

Denoiser::Layer Denoiser::make_layer(const std::string& name, int ci, int co, bool transposed,
                                     bool bare, std::mt19937_64& rng) {
  Layer l;
  int kt = cfg_.kernel_t, kf = cfg_.kernel_f;
  auto kinit = [&] {
    return transposed ? deconv_kernel_init(ci, co, kt, kf, rng)
                      : conv_kernel_init(co, ci, kt, kf, rng);
  };
  l.w.real = &params_.add(name + ".wr", kinit());
  l.w.imag = &params_.add(name + ".wi", kinit());
  l.bare = bare;
  if (!bare) {
    l.gamma_r = &params_.add(name + ".gamma_r", channel_vec(co, 1.0));
    l.beta_r = &params_.add(name + ".beta_r", channel_vec(co, 0.0));
    l.gamma_i = &params_.add(name + ".gamma_i", channel_vec(co, 1.0));
    l.beta_i = &params_.add(name + ".beta_i", channel_vec(co, 0.0));
    l.alpha_r = &params_.add(name + ".alpha_r", channel_vec(co, 0.25));
    l.alpha_i = &params_.add(name + ".alpha_i", channel_vec(co, 0.25));
  }
  return l;
}

TfaParams Denoiser::make_tfa(const std::string& name, int channels, std::mt19937_64& rng) {
  int cq = attn_proj_channels(channels);
  TfaParams p;
  p.wq = &params_.add(name + ".wq", conv_kernel_init(cq, channels, 1, 1, rng));
  p.wk = &params_.add(name + ".wk", conv_kernel_init(cq, channels, 1, 1, rng));
  p.wv = &params_.add(name + ".wv", conv_kernel_init(channels, channels, 1, 1, rng));
  p.lambda = &params_.add(name + ".lambda", Tensor::scalar(0.0));
  return p;
}

Denoiser::Denoiser(const std::string& prefix, const DcdConfig& cfg, uint64_t seed)
    : cfg_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  int n = static_cast<int>(cfg.encoder_channels.size());

  int ci = 1;
  for (int i = 0; i < n; ++i) {
    int co = cfg.encoder_channels[static_cast<std::size_t>(i)];
    encoder_.push_back(make_layer(prefix + ".enc" + std::to_string(i), ci, co,
                                  /*transposed=*/false, /*bare=*/false, rng));
    ci = co;
  }

  int c_mid = cfg.encoder_channels.back();
  for (int i = 0; i < cfg.ctfsa_blocks; ++i) {
    std::string name = prefix + ".ctfsa" + std::to_string(i);
    bottleneck_.emplace_back(make_tfa(name + ".t", c_mid, rng), make_tfa(name + ".f", c_mid, rng));
  }

  // Decoder layer i consumes prev output concatenated with encoder skip
  // n-1-i and produces the width of encoder layer n-2-i (1 complex channel
  // at the end).
  int prev = c_mid;
  for (int i = 0; i < n; ++i) {
    int skip_c = cfg.encoder_channels[static_cast<std::size_t>(n - 1 - i)];
    int co = i + 1 == n ? 1 : cfg.encoder_channels[static_cast<std::size_t>(n - 2 - i)];
    bool bare = i + 1 == n;
    decoder_.push_back(make_layer(prefix + ".dec" + std::to_string(i), prev + skip_c, co,
                                  /*transposed=*/true, bare, rng));
    prev = co;
  }
}

Denoiser::Output Denoiser::forward(GradTape& t, CVar x) const {
  require(t.shape(x.re) == t.shape(x.im), "dcd: real/imag shape mismatch");
  require(t.shape(x.re).c == 1, "dcd: expected a single complex input channel");

  int kt = cfg_.kernel_t, kf = cfg_.kernel_f;
  Conv2dGeom enc_geom;
  enc_geom.stride_t = cfg_.stride_t;
  enc_geom.stride_f = cfg_.stride_f;
  enc_geom.pad_t = (kt - 1) / 2;
  enc_geom.pad_f = (kf - 1) / 2;

  std::vector<CVar> skips;
  std::vector<int> f_dims;
  CVar h = x;
  for (const Layer& l : encoder_) {
    f_dims.push_back(t.shape(h.re).f);
    h = complex_conv2d(t, h, l.w, enc_geom);
    h = complex_instance_norm(t, h, t.leaf(*l.gamma_r), t.leaf(*l.beta_r), t.leaf(*l.gamma_i),
                              t.leaf(*l.beta_i));
    h = cprelu(t, h, t.leaf(*l.alpha_r), t.leaf(*l.alpha_i));
    skips.push_back(h);
  }

  for (const auto& [p_t, p_f] : bottleneck_) h = ct_f_sa(t, h, p_t, p_f);

  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    const Layer& l = decoder_[i];
    std::size_t lvl = decoder_.size() - 1 - i;
    h = complex_concat_c(t, h, skips[skips.size() - 1 - i]);
    Conv2dGeom g = enc_geom;
    int f_target = f_dims[lvl];
    g.out_pad_f = f_target - deconv_out_dim(t.shape(h.re).f, kf, g.stride_f, g.pad_f, g.dil_f, 0);
    require(g.out_pad_f >= 0 && g.out_pad_f <= 1, "dcd: inconsistent upsample geometry");
    h = complex_deconv2d(t, h, l.w, g);
    if (!l.bare) {
      h = complex_instance_norm(t, h, t.leaf(*l.gamma_r), t.leaf(*l.beta_r), t.leaf(*l.gamma_i),
                                t.leaf(*l.beta_i));
      h = cprelu(t, h, t.leaf(*l.alpha_r), t.leaf(*l.alpha_i));
    }
  }

  require(t.shape(h.re) == t.shape(x.re), "dcd: output shape drifted to " + t.shape(h.re).str());
  Output out;
  out.mask = bound_mask(t, h);
  out.enhanced = apply_mask(t, x, out.mask);
  return out;
}

}  // namespace sepipe::models
