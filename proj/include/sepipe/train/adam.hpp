#pragma once

#include <string>
#include <vector>

#include "sepipe/nn/param_store.hpp"
#include "sepipe/train/schedule.hpp"

namespace sepipe::train {

// Adam over named parameter groups. Each group keeps its own step count so
// bias correction tracks how often that group has actually been updated.
class Adam {
 public:
  explicit Adam(OptimizerConfig cfg) : cfg_(cfg) { cfg.validate(); }

  void add_group(const std::string& name, std::vector<nn::Parameter*> params);

  // Applies one update to the group from the gradients currently held by its
  // parameters (optionally clipped by global norm), then clears them.
  void step(const std::string& group, double lr);

  void zero_grad();

  // Moments and step counts, for checkpoints.
  void save_tensors(nn::TensorStore& store) const;
  void load_tensors(const nn::TensorStore& store);

  const OptimizerConfig& config() const { return cfg_; }

 private:
  struct Group {
    std::string name;
    std::vector<nn::Parameter*> params;
    std::vector<nn::Tensor> m, v;
    int64_t t = 0;
  };
  Group& find(const std::string& name);

  OptimizerConfig cfg_;
  std::vector<Group> groups_;
};

}  // namespace sepipe::train
