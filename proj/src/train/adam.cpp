#include "sepipe/train/adam.hpp"

#include <cmath>

namespace sepipe::train {

void Adam::add_group(const std::string& name, std::vector<nn::Parameter*> params) {
  for (const Group& g : groups_) require(g.name != name, "adam: duplicate group " + name);
  Group g;
  g.name = name;
  g.params = std::move(params);
  for (nn::Parameter* p : g.params) {
    g.m.emplace_back(p->value.shape());
    g.v.emplace_back(p->value.shape());
  }
  groups_.push_back(std::move(g));
}

Adam::Group& Adam::find(const std::string& name) {
  for (Group& g : groups_)
    if (g.name == name) return g;
  throw Error(Error::Kind::validation, "adam: unknown group " + name);
}

void Adam::step(const std::string& group, double lr) {
  Group& g = find(group);
  require(lr > 0, "adam: lr must be positive");

  if (cfg_.grad_clip) {
    double sq = 0;
    for (nn::Parameter* p : g.params)
      for (std::size_t i = 0; i < p->grad.size(); ++i) sq += p->grad[i] * p->grad[i];
    double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip_norm) {
      double scale = cfg_.grad_clip_norm / norm;
      for (nn::Parameter* p : g.params)
        for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= scale;
    }
  }

  ++g.t;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(g.t));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(g.t));
  for (std::size_t k = 0; k < g.params.size(); ++k) {
    nn::Parameter* p = g.params[k];
    nn::Tensor& m = g.m[k];
    nn::Tensor& v = g.v[k];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double grad = p->grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * grad;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * grad * grad;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p->value[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p->zero_grad();
  }
}

void Adam::zero_grad() {
  for (Group& g : groups_)
    for (nn::Parameter* p : g.params) p->zero_grad();
}

void Adam::save_tensors(nn::TensorStore& store) const {
  for (const Group& g : groups_) {
    store.put("adam." + g.name + ".t", nn::Tensor::scalar(static_cast<double>(g.t)));
    for (std::size_t k = 0; k < g.params.size(); ++k) {
      store.put("adam." + g.name + ".m." + g.params[k]->name, g.m[k]);
      store.put("adam." + g.name + ".v." + g.params[k]->name, g.v[k]);
    }
  }
}

void Adam::load_tensors(const nn::TensorStore& store) {
  for (Group& g : groups_) {
    g.t = static_cast<int64_t>(store.get("adam." + g.name + ".t")[0]);
    for (std::size_t k = 0; k < g.params.size(); ++k) {
      g.m[k] = store.get("adam." + g.name + ".m." + g.params[k]->name);
      g.v[k] = store.get("adam." + g.name + ".v." + g.params[k]->name);
      require(g.m[k].shape() == g.params[k]->value.shape(), "adam: moment shape mismatch");
    }
  }
}

}  // namespace sepipe::train
