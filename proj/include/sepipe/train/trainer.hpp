#pragma once

#include <map>
#include <optional>

#include "sepipe/audio/dataset.hpp"
#include "sepipe/config.hpp"
#include "sepipe/train/checkpoint.hpp"

namespace sepipe::train {

struct StepLog {
  std::string phase;
  int epoch = 0;
  int step = 0;  // within the epoch
  int64_t global_step = 0;
  std::map<std::string, double> values;  // loss components and learning rates
};

// Two-phase optimization: adversarial magnitude pretraining, then joint
// training of the full pipeline. Per-step update order is D_X, D_Y, G/F in
// stage one and D_Y, then G/F + denoiser jointly in stage two. All batch and
// crop randomness derives from (seed, phase, epoch, step), so a resumed run
// replays an uninterrupted one bit for bit.
class Trainer {
 public:
  Trainer(models::TwoStageModel& model, const RunConfig& cfg, audio::Manifest manifest,
          std::string log_path = "");

  // Runs the remaining epochs of each phase (at most max_epochs when
  // nonnegative); writes `latest.ckpt` into ckpt_dir after every epoch and a
  // final per-phase checkpoint when the phase completes.
  void train_stage1(const std::string& ckpt_dir, int max_epochs = -1);
  void train_joint(const std::string& ckpt_dir, int max_epochs = -1);

  void resume(const std::string& ckpt_path);
  void start_joint_from(const std::string& stage1_ckpt_path);

  const TrainState& state() const { return state_; }
  const std::vector<StepLog>& logs() const { return logs_; }

 private:
  StepLog step_stage1(const audio::SpectrogramBatch& batch, bool include_identity);
  StepLog step_joint(const audio::SpectrogramBatch& batch, bool include_identity, double lr_gan,
                     double lr_dcd);
  audio::SpectrogramBatch make_batch(int phase_id, int epoch, int step);
  int steps_per_epoch() const;
  void checkpoint(const std::string& ckpt_dir, const std::string& name);
  void append_log(const StepLog& log);
  void assert_zero_grads(const std::vector<nn::Parameter*>& params, const char* when) const;
  bool identity_active_global(int global_epoch) const {
    return global_epoch < cfg_.schedule.identity_epochs;
  }

  models::TwoStageModel& model_;
  RunConfig cfg_;
  audio::Manifest manifest_;
  Adam opt_;
  TrainState state_;
  std::vector<StepLog> logs_;
  std::string log_path_;
};

}  // namespace sepipe::train
