#pragma once

#include <deque>
#include <random>
#include <string>
#include <vector>

#include "sepipe/nn/tensor.hpp"

namespace sepipe::models {

// Owns parameters with stable addresses and hierarchical names.
class ParamSet {
 public:
  nn::Parameter& add(const std::string& name, nn::Tensor init) {
    params_.emplace_back(name, std::move(init));
    return params_.back();
  }
  void collect(std::vector<nn::Parameter*>& out) {
    for (auto& p : params_) out.push_back(&p);
  }

 private:
  std::deque<nn::Parameter> params_;
};

inline nn::Tensor glorot_uniform(nn::Shape s, int fan_in, int fan_out, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  nn::Tensor t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

// (Cout, Cin, kT, kF) kernel for conv2d.
inline nn::Tensor conv_kernel_init(int co, int ci, int kt, int kf, std::mt19937_64& rng) {
  return glorot_uniform(nn::Shape{co, ci, kt, kf}, ci * kt * kf, co * kt * kf, rng);
}

// (Cin, Cout, kT, kF) kernel for deconv2d.
inline nn::Tensor deconv_kernel_init(int ci, int co, int kt, int kf, std::mt19937_64& rng) {
  return glorot_uniform(nn::Shape{ci, co, kt, kf}, ci * kt * kf, co * kt * kf, rng);
}

inline nn::Tensor channel_vec(int c, double v) {
  nn::Tensor t(nn::Shape{1, c, 1, 1});
  t.fill(v);
  return t;
}

}  // namespace sepipe::models
