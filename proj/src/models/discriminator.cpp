#include "sepipe/models/discriminator.hpp"

namespace sepipe::models {

using namespace sepipe::nn;

Discriminator::Discriminator(const std::string& prefix, const DiscriminatorConfig& cfg,
                             uint64_t seed)
    : cfg_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  int ci = 1;
  for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
    bool last = i + 1 == cfg.channels.size();
    int kt = last ? 1 : cfg.kernel_t;
    int kf = last ? 1 : cfg.kernel_f;
    int co = cfg.channels[i];
    Layer l;
    std::string name = prefix + ".conv" + std::to_string(i);
    l.w = &params_.add(name + ".w", conv_kernel_init(co, ci, kt, kf, rng));
    l.b = &params_.add(name + ".b", channel_vec(co, 0.0));
    if (!last) l.alpha = &params_.add(name + ".alpha", channel_vec(co, 0.25));
    layers_.push_back(l);
    sn_.emplace_back(l.w->value, rng);
    ci = co;
  }
}

Var Discriminator::score_map(GradTape& t, Var mag, bool trainable) const {
  require(t.shape(mag).c == 1, "discriminator: expected a single input channel");
  Var h = mag;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    bool last = i + 1 == layers_.size();
    Conv2dGeom g;
    if (!last) {
      g.stride_t = cfg_.stride_t;
      g.stride_f = cfg_.stride_f;
      g.pad_t = (cfg_.kernel_t - 1) / 2;
      g.pad_f = (cfg_.kernel_f - 1) / 2;
    }
    Var w = t.leaf(*l.w, trainable);
    if (cfg_.spectral_norm) w = sn_[i].apply(t, w);
    h = conv2d(t, h, w, t.leaf(*l.b, trainable), g);
    if (l.alpha) h = prelu(t, h, t.leaf(*l.alpha, trainable));
  }
  return h;
}

Var Discriminator::forward(GradTape& t, Var mag, bool trainable) const {
  return mean_keep_b(t, score_map(t, mag, trainable));
}

void Discriminator::sn_update() {
  if (!cfg_.spectral_norm) return;
  for (std::size_t i = 0; i < layers_.size(); ++i) sn_[i].update(layers_[i].w->value);
}

}  // namespace sepipe::models
