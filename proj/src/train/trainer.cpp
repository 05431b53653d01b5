#include "sepipe/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "sepipe/losses.hpp"

namespace sepipe::train {

using namespace sepipe::nn;
using sepipe::losses::cycle_loss;
using sepipe::losses::cyclegan_total;
using sepipe::losses::dcd_mag_loss;
using sepipe::losses::dcd_ri_loss;
using sepipe::losses::full_loss;
using sepipe::losses::identity_loss;
using sepipe::losses::rals_d_loss;
using sepipe::losses::rals_g_loss;

namespace {

constexpr int kPhaseStage1 = 1;
constexpr int kPhaseJoint = 2;

void check_finite(const StepLog& log) {
  for (const auto& [k, v] : log.values)
    require_runtime(std::isfinite(v), "training diverged: non-finite " + k + " at step " +
                                          std::to_string(log.global_step));
}

}  // namespace

Trainer::Trainer(models::TwoStageModel& model, const RunConfig& cfg, audio::Manifest manifest,
                 std::string log_path)
    : model_(model), cfg_(cfg), manifest_(std::move(manifest)), opt_(cfg.optimizer),
      log_path_(std::move(log_path)) {
  cfg_.validate();
  state_.config_json = cfg_.to_json_string();
  opt_.add_group("d_x", [&] {
    std::vector<Parameter*> v;
    model_.d_x.collect(v);
    return v;
  }());
  opt_.add_group("d_y", [&] {
    std::vector<Parameter*> v;
    model_.d_y.collect(v);
    return v;
  }());
  opt_.add_group("g", model_.generator_params());
  opt_.add_group("dcd", model_.dcd_params());
}

int Trainer::steps_per_epoch() const {
  int n = static_cast<int>(manifest_.entries.size());
  int b = cfg_.schedule.batch_size;
  return (n + b - 1) / b;
}

audio::SpectrogramBatch Trainer::make_batch(int phase_id, int epoch, int step) {
  std::size_t n = manifest_.entries.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 shuffle_rng(
      seed_stream(cfg_.schedule.seed, 0x5350u, static_cast<uint64_t>(phase_id),
                  static_cast<uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  std::size_t b = static_cast<std::size_t>(cfg_.schedule.batch_size);
  std::size_t lo = static_cast<std::size_t>(step) * b;
  std::size_t hi = std::min(lo + b, n);
  require(lo < n, "internal: step beyond epoch");
  std::vector<std::size_t> indices(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                   order.begin() + static_cast<std::ptrdiff_t>(hi));

  uint64_t crop_seed =
      seed_stream(seed_stream(cfg_.schedule.seed, 0x4352u, static_cast<uint64_t>(phase_id),
                              static_cast<uint64_t>(epoch)),
                  static_cast<uint64_t>(step));
  return audio::build_batch(manifest_, indices, cfg_.schedule.crop_frames, crop_seed,
                            cfg_.stft, cfg_.sample_rate_hz);
}

void Trainer::assert_zero_grads(const std::vector<Parameter*>& params, const char* when) const {
  for (const Parameter* p : params)
    for (std::size_t i = 0; i < p->grad.size(); ++i)
      require_runtime(p->grad[i] == 0.0,
                      std::string("gradient isolation violated (") + when + "): " + p->name);
}

StepLog Trainer::step_stage1(const audio::SpectrogramBatch& batch, bool include_identity) {
  const auto& sched = cfg_.schedule;
  model_.sn_update();
  opt_.zero_grad();

  // One tape carries the generator forwards; discriminator sub-steps see the
  // fake magnitudes as detached constants.
  GradTape tg;
  Var x = tg.constant(batch.noisy_mag);
  Var y = tg.constant(batch.clean_mag);
  Var gx = model_.g_xy.forward(tg, x);   // enhanced magnitude
  Var fy = model_.f_yx.forward(tg, y);   // synthesized noisy magnitude

  double d_x_loss, d_y_loss;
  {
    GradTape td;
    Var real_x = model_.d_x.forward(td, td.constant(tg.value(x)));
    Var fake_x = model_.d_x.forward(td, td.constant(tg.value(fy)));
    Var real_y = model_.d_y.forward(td, td.constant(tg.value(y)));
    Var fake_y = model_.d_y.forward(td, td.constant(tg.value(gx)));
    Var loss_dx = rals_d_loss(td, real_x, fake_x);
    Var loss_dy = rals_d_loss(td, real_y, fake_y);
    td.backward(add(td, loss_dx, loss_dy));
    d_x_loss = td.value(loss_dx)[0];
    d_y_loss = td.value(loss_dy)[0];
    assert_zero_grads(model_.generator_params(), "discriminator step");
    opt_.step("d_x", sched.lr_d1);
    opt_.step("d_y", sched.lr_d1);
  }

  // Generator step against the updated discriminators (frozen leaves).
  Var cyc = cycle_loss(tg, x, model_.f_yx.forward(tg, gx), y, model_.g_xy.forward(tg, fy));
  Var id = include_identity
               ? identity_loss(tg, model_.f_yx.forward(tg, x), x, model_.g_xy.forward(tg, y), y)
               : tg.constant(Tensor::scalar(0.0));
  Var adv_g = rals_g_loss(tg, model_.d_y.forward(tg, y, /*trainable=*/false),
                          model_.d_y.forward(tg, gx, /*trainable=*/false));
  Var adv_f = rals_g_loss(tg, model_.d_x.forward(tg, x, /*trainable=*/false),
                          model_.d_x.forward(tg, fy, /*trainable=*/false));
  Var total = cyclegan_total(tg, adv_g, adv_f, cyc, id, cfg_.loss, include_identity);
  tg.backward(total);
  assert_zero_grads(model_.discriminator_params(), "generator step");
  opt_.step("g", sched.lr_g1);

  StepLog log;
  log.values["d_x"] = d_x_loss;
  log.values["d_y"] = d_y_loss;
  log.values["adv_g"] = tg.value(adv_g)[0];
  log.values["adv_f"] = tg.value(adv_f)[0];
  log.values["cycle"] = tg.value(cyc)[0];
  log.values["identity"] = tg.value(id)[0];
  log.values["identity_active"] = include_identity ? 1.0 : 0.0;
  log.values["cyclegan_total"] = tg.value(total)[0];
  log.values["lr_d"] = sched.lr_d1;
  log.values["lr_g"] = sched.lr_g1;
  return log;
}

StepLog Trainer::step_joint(const audio::SpectrogramBatch& batch, bool include_identity,
                            double lr_gan, double lr_dcd) {
  model_.sn_update();
  opt_.zero_grad();

  GradTape tg;
  Var x = tg.constant(batch.noisy_mag);
  Var y = tg.constant(batch.clean_mag);
  Var gx = model_.g_xy.forward(tg, x);
  Var fy = model_.f_yx.forward(tg, y);

  // Stage-two discriminator update (D_Y only; D_X stays frozen in joint).
  double d_y_loss;
  {
    GradTape td;
    Var real_y = model_.d_y.forward(td, td.constant(tg.value(y)));
    Var fake_y = model_.d_y.forward(td, td.constant(tg.value(gx)));
    Var loss_dy = rals_d_loss(td, real_y, fake_y);
    td.backward(loss_dy);
    d_y_loss = td.value(loss_dy)[0];
    assert_zero_grads(model_.generator_params(), "discriminator step");
    assert_zero_grads(model_.dcd_params(), "discriminator step");
    opt_.step("d_y", lr_gan);
  }

  // Couple the estimated magnitude with the (constant) noisy phase.
  const Tensor& nr = batch.noisy_re;
  const Tensor& ni = batch.noisy_im;
  Tensor cos_ph(nr.shape()), sin_ph(nr.shape());
  for (std::size_t i = 0; i < nr.size(); ++i) {
    double re = nr[i], im = ni[i];
    double mag = std::sqrt(re * re + im * im);
    cos_ph[i] = mag > 0 ? re / mag : 1.0;
    sin_ph[i] = mag > 0 ? im / mag : 0.0;
  }
  CVar coarse{mul(tg, gx, tg.constant(std::move(cos_ph))),
              mul(tg, gx, tg.constant(std::move(sin_ph)))};

  models::Denoiser::Output dcd_out = model_.dcd.forward(tg, coarse);
  CVar clean{tg.constant(batch.clean_re), tg.constant(batch.clean_im)};
  Var ri = dcd_ri_loss(tg, dcd_out.enhanced, clean);
  Var mag_l = dcd_mag_loss(tg, dcd_out.enhanced, clean);

  Var cyc = cycle_loss(tg, x, model_.f_yx.forward(tg, gx), y, model_.g_xy.forward(tg, fy));
  Var id = include_identity
               ? identity_loss(tg, model_.f_yx.forward(tg, x), x, model_.g_xy.forward(tg, y), y)
               : tg.constant(Tensor::scalar(0.0));
  Var adv_g = rals_g_loss(tg, model_.d_y.forward(tg, y, /*trainable=*/false),
                          model_.d_y.forward(tg, gx, /*trainable=*/false));
  Var adv_f = rals_g_loss(tg, model_.d_x.forward(tg, x, /*trainable=*/false),
                          model_.d_x.forward(tg, fy, /*trainable=*/false));
  Var gan_total = cyclegan_total(tg, adv_g, adv_f, cyc, id, cfg_.loss, include_identity);
  Var total = full_loss(tg, ri, mag_l, gan_total, cfg_.loss.gamma);
  tg.backward(total);
  assert_zero_grads(model_.discriminator_params(), "joint generator step");
  opt_.step("g", lr_gan);
  opt_.step("dcd", lr_dcd);

  StepLog log;
  log.values["d_y"] = d_y_loss;
  log.values["adv_g"] = tg.value(adv_g)[0];
  log.values["adv_f"] = tg.value(adv_f)[0];
  log.values["cycle"] = tg.value(cyc)[0];
  log.values["identity"] = tg.value(id)[0];
  log.values["identity_active"] = include_identity ? 1.0 : 0.0;
  log.values["cyclegan_total"] = tg.value(gan_total)[0];
  log.values["dcd_ri"] = tg.value(ri)[0];
  log.values["dcd_mag"] = tg.value(mag_l)[0];
  log.values["dcd"] = tg.value(ri)[0] + tg.value(mag_l)[0];
  log.values["full"] = tg.value(total)[0];
  log.values["lr_gan"] = lr_gan;
  log.values["lr_dcd"] = lr_dcd;
  return log;
}

void Trainer::append_log(const StepLog& log) {
  logs_.push_back(log);
  if (log_path_.empty()) return;
  std::FILE* f = std::fopen(log_path_.c_str(), "a");
  require_runtime(f != nullptr, "cannot open training log: " + log_path_);
  std::fprintf(f, "{\"phase\":\"%s\",\"epoch\":%d,\"step\":%d,\"global_step\":%lld",
               log.phase.c_str(), log.epoch, log.step, static_cast<long long>(log.global_step));
  for (const auto& [k, v] : log.values) std::fprintf(f, ",\"%s\":%.17g", k.c_str(), v);
  std::fprintf(f, "}\n");
  std::fclose(f);
}

void Trainer::checkpoint(const std::string& ckpt_dir, const std::string& name) {
  std::filesystem::create_directories(ckpt_dir);
  save_checkpoint(ckpt_dir + "/" + name, model_, opt_, state_);
}

void Trainer::train_stage1(const std::string& ckpt_dir, int max_epochs) {
  require(state_.phase == "stage1", "train_stage1: run is already past stage 1");
  int spe = steps_per_epoch();
  int last = cfg_.schedule.stage1_epochs;
  if (max_epochs >= 0) last = std::min(last, state_.epoch + max_epochs);
  for (int epoch = state_.epoch; epoch < last; ++epoch) {
    bool include_identity = identity_active_global(epoch);
    for (int step = 0; step < spe; ++step) {
      StepLog log = step_stage1(make_batch(kPhaseStage1, epoch, step), include_identity);
      log.phase = "stage1";
      log.epoch = epoch;
      log.step = step;
      log.global_step = state_.global_step++;
      check_finite(log);
      append_log(log);
    }
    state_.epoch = epoch + 1;
    checkpoint(ckpt_dir, "latest.ckpt");
  }
  if (state_.epoch >= cfg_.schedule.stage1_epochs) checkpoint(ckpt_dir, "stage1_final.ckpt");
}

void Trainer::train_joint(const std::string& ckpt_dir, int max_epochs) {
  require(state_.phase == "joint",
          "train_joint: load a stage-1 checkpoint first (start_joint_from/resume)");
  int spe = steps_per_epoch();
  int last = cfg_.schedule.total_epochs;
  if (max_epochs >= 0) last = std::min(last, state_.epoch + max_epochs);
  for (int epoch = state_.epoch; epoch < last; ++epoch) {
    bool include_identity = identity_active_global(cfg_.schedule.stage1_epochs + epoch);
    double lr_gan = lr_at(epoch, cfg_.schedule.lr_cyclegan_joint, cfg_.schedule);
    double lr_dcd = lr_at(epoch, cfg_.schedule.lr_dcd, cfg_.schedule);
    for (int step = 0; step < spe; ++step) {
      StepLog log = step_joint(make_batch(kPhaseJoint, epoch, step), include_identity, lr_gan,
                               lr_dcd);
      log.phase = "joint";
      log.epoch = epoch;
      log.step = step;
      log.global_step = state_.global_step++;
      check_finite(log);
      append_log(log);
    }
    state_.epoch = epoch + 1;
    checkpoint(ckpt_dir, "latest.ckpt");
  }
  if (state_.epoch >= cfg_.schedule.total_epochs) checkpoint(ckpt_dir, "joint_final.ckpt");
}

void Trainer::resume(const std::string& ckpt_path) {
  state_ = load_checkpoint(ckpt_path, model_, opt_);
}

void Trainer::start_joint_from(const std::string& stage1_ckpt_path) {
  TrainState st = load_checkpoint(stage1_ckpt_path, model_, opt_);
  require(st.phase == "stage1", "start_joint_from: expected a stage-1 checkpoint");
  require(st.epoch >= cfg_.schedule.stage1_epochs,
          "start_joint_from: stage 1 is not finished in this checkpoint");
  state_ = st;
  state_.phase = "joint";
  state_.epoch = 0;
}

}  // namespace sepipe::train
