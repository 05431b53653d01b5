#pragma once

#include <cstdint>

#include "sepipe/common.hpp"

namespace sepipe::train {

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool grad_clip = true;
  double grad_clip_norm = 5.0;

  void validate() const {
    require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "adam: betas must be in [0,1)");
    require(eps > 0, "adam: eps must be positive");
    require(grad_clip_norm > 0, "adam: clip norm must be positive");
  }
};

struct ScheduleConfig {
  int stage1_epochs = 20;
  int identity_epochs = 20;  // counted in global epochs (stage 1 + joint)
  int total_epochs = 100;    // joint-phase epochs
  int decay_start_epoch = 50;  // joint-phase counter
  double lr_d1 = 2e-4;
  double lr_g1 = 5e-4;
  double lr_dcd = 1e-3;
  double lr_cyclegan_joint = 1e-4;
  int batch_size = 8;
  int crop_frames = 128;
  uint64_t seed = 0;

  void validate() const {
    require(stage1_epochs >= 0 && total_epochs >= 1, "schedule: bad epoch counts");
    require(identity_epochs <= stage1_epochs + total_epochs,
            "schedule: identity_epochs exceeds the run length");
    require(decay_start_epoch < total_epochs, "schedule: decay must start before the last epoch");
    require(lr_d1 > 0 && lr_g1 > 0 && lr_dcd > 0 && lr_cyclegan_joint > 0,
            "schedule: learning rates must be positive");
    require(batch_size >= 1 && crop_frames >= 1, "schedule: bad batch geometry");
  }
};

// Constant until decay_start_epoch, then linear toward zero just past the
// last epoch: base * (total - epoch) / (total - decay_start).
inline double lr_at(int epoch, double base_lr, const ScheduleConfig& s) {
  if (epoch < s.decay_start_epoch) return base_lr;
  return base_lr * static_cast<double>(s.total_epochs - epoch) /
         static_cast<double>(s.total_epochs - s.decay_start_epoch);
}

}  // namespace sepipe::train
