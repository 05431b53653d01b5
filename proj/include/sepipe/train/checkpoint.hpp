#pragma once

#include "sepipe/models/pipeline.hpp"
#include "sepipe/train/adam.hpp"

namespace sepipe::train {

// Schedule position of a training run. Epoch counters are phase-local; batch
// and crop randomness derive from (seed, phase, epoch, step), so together
// with the stored tensors this reproduces the run exactly.
struct TrainState {
  std::string phase = "stage1";  // "stage1" or "joint"
  int epoch = 0;                 // next epoch to run within the phase
  int64_t global_step = 0;
  std::string config_json;  // echo of the run configuration
};

// Single file: magic + version line, JSON meta line, then the tensor store
// holding parameters, Adam moments, and spectral-norm vectors.
void save_checkpoint(const std::string& path, models::TwoStageModel& model, const Adam& opt,
                     const TrainState& state);

TrainState load_checkpoint(const std::string& path, models::TwoStageModel& model, Adam& opt);

// Meta only (model untouched); used for validation and `--from-stage1`.
TrainState peek_checkpoint(const std::string& path);

// Restores model tensors without optimizer state (stage-1 weights feeding
// joint training).
TrainState load_model_only(const std::string& path, models::TwoStageModel& model);

}  // namespace sepipe::train
