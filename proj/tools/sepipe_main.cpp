// Command-line surface for the two-stage speech enhancement pipeline.
// Exit codes: 0 success, 1 validation failure, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sepipe/config.hpp"
#include "sepipe/gradsuite.hpp"
#include "sepipe/metrics.hpp"
#include "sepipe/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace sepipe;

namespace {

std::string resolve(const std::string& workdir, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(workdir) / path).string();
}

RunConfig load_cfg(const std::string& workdir, const std::string& config_path,
                   const std::vector<std::string>& overrides) {
  if (config_path.empty()) {
    RunConfig c = default_config();
    if (!overrides.empty()) return parse_config(c.to_json_string(), overrides);
    return c;
  }
  return load_config_file(resolve(workdir, config_path), overrides);
}

int cmd_prepare_data(const std::string& workdir, const std::string& config_path,
                     const std::vector<std::string>& overrides, const std::string& manifest_path,
                     const std::string& out_dir, uint64_t seed_override, bool have_seed) {
  RunConfig cfg = load_cfg(workdir, config_path, overrides);
  if (have_seed) cfg.schedule.seed = seed_override;
  audio::Manifest manifest = audio::load_manifest(resolve(workdir, manifest_path));
  std::string out = resolve(workdir, out_dir);
  fs::create_directories(out);

  std::FILE* cache = std::fopen((out + "/mixtures.jsonl").c_str(), "w");
  require_runtime(cache != nullptr, "cannot open cache in " + out);
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    audio::RenderedPair pair = audio::render_entry(manifest.entries[i], cfg.sample_rate_hz);
    dsp::ComplexSpectrogram spec = dsp::stft(pair.noisy, cfg.stft);
    std::string base = out + "/" + std::to_string(i);
    audio::save_wav(base + ".noisy.wav", pair.noisy);
    audio::save_wav(base + ".clean.wav", pair.clean);
    std::fprintf(cache,
                 "{\"id\":%zu,\"samples\":%zu,\"frames\":%d,\"bins\":%d,\"snr_db\":%.17g}\n", i,
                 pair.noisy.samples.size(), spec.frames, spec.bins, manifest.entries[i].snr_db);
  }
  std::fclose(cache);
  std::printf("prepared %zu mixtures into %s\n", manifest.entries.size(), out.c_str());
  return 0;
}

int cmd_train(bool joint, const std::string& workdir, const std::string& config_path,
              const std::vector<std::string>& overrides, const std::string& manifest_path,
              const std::string& out_dir, const std::string& resume_path,
              const std::string& from_stage1) {
  RunConfig cfg = load_cfg(workdir, config_path, overrides);
  audio::Manifest manifest = audio::load_manifest(resolve(workdir, manifest_path));
  std::string out = resolve(workdir, out_dir);
  fs::create_directories(out);

  models::TwoStageModel model(cfg.model_spec());
  train::Trainer trainer(model, cfg, manifest, out + "/train_log.jsonl");

  if (!resume_path.empty()) {
    trainer.resume(resolve(workdir, resume_path));
  } else if (joint) {
    require(!from_stage1.empty(), "train-joint needs --from-stage1 or --resume");
    trainer.start_joint_from(resolve(workdir, from_stage1));
  }

  if (joint)
    trainer.train_joint(out);
  else
    trainer.train_stage1(out);

  std::printf("trained %s to epoch %d (%lld steps); checkpoints in %s\n",
              trainer.state().phase.c_str(), trainer.state().epoch,
              static_cast<long long>(trainer.state().global_step), out.c_str());
  return 0;
}

int cmd_enhance(const std::string& workdir, const std::string& ckpt_path,
                const std::string& in_path, const std::string& out_path,
                const std::string& dump_dir) {
  models::TwoStageModel* model = nullptr;
  train::TrainState st = train::peek_checkpoint(resolve(workdir, ckpt_path));
  RunConfig cfg = parse_config(st.config_json);
  models::TwoStageModel m(cfg.model_spec());
  train::load_model_only(resolve(workdir, ckpt_path), m);
  model = &m;

  audio::Waveform in = audio::load_wav(resolve(workdir, in_path));
  audio::Waveform at_rate = audio::resample(in, cfg.sample_rate_hz);
  models::EnhanceTrace tr = models::two_stage_enhance_trace(at_rate, *model);
  audio::save_wav(resolve(workdir, out_path), tr.enhanced);

  if (!dump_dir.empty()) {
    std::string d = resolve(workdir, dump_dir);
    fs::create_directories(d);
    dsp::dump_csv(tr.noisy_spec, d + "/noisy.csv");
    dsp::dump_png(tr.noisy_spec, d + "/noisy.png");
    dsp::dump_csv(tr.stage1_spec, d + "/stage1.csv");
    dsp::dump_png(tr.stage1_spec, d + "/stage1.png");
    dsp::dump_csv(tr.enhanced_spec, d + "/enhanced.csv");
    dsp::dump_png(tr.enhanced_spec, d + "/enhanced.png");
  }
  std::printf("enhanced %s -> %s (%zu samples @ %d Hz)\n", in_path.c_str(), out_path.c_str(),
              tr.enhanced.samples.size(), tr.enhanced.sample_rate_hz);
  return 0;
}

int cmd_evaluate(const std::string& workdir, const std::string& ckpt_path,
                 const std::string& manifest_path, const std::string& out_dir) {
  train::TrainState st = train::peek_checkpoint(resolve(workdir, ckpt_path));
  RunConfig cfg = parse_config(st.config_json);
  models::TwoStageModel model(cfg.model_spec());
  train::load_model_only(resolve(workdir, ckpt_path), model);

  audio::Manifest manifest = audio::load_manifest(resolve(workdir, manifest_path));
  std::string out = resolve(workdir, out_dir);
  metrics::EvalReport rep =
      metrics::evaluate(manifest, model, cfg.sample_rate_hz, out, cfg.to_json_string());
  metrics::write_report(rep, out + "/report.txt");
  std::printf("evaluated %zu utterances: ssnr %.2f -> %.2f dB, si-snr %.2f -> %.2f dB\n",
              rep.rows.size(), rep.aggregate.ssnr_in, rep.aggregate.ssnr_out,
              rep.aggregate.si_snr_in, rep.aggregate.si_snr_out);
  return 0;
}

int cmd_gradcheck(const std::string& scope, double tol) {
  auto items = run_grad_suite(scope, tol);
  bool all_ok = true;
  for (const auto& item : items) {
    std::printf("%-28s max_rel_err %.3e over %zu probes  %s\n", item.name.c_str(),
                item.report.max_rel_err, item.report.probes, item.passed ? "ok" : "FAIL");
    if (!item.passed) {
      std::printf("  worst: %s\n", item.report.worst.c_str());
      all_ok = false;
    }
  }
  if (!all_ok) throw Error(Error::Kind::runtime, "gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage speech enhancement pipeline"};
  app.require_subcommand(1);

  std::string workdir = ".";
  app.add_option("--workdir", workdir, "Root for relative paths")->capture_default_str();

  std::string config_path, manifest_path, out_dir, resume_path, from_stage1;
  std::string ckpt_path, in_path, out_path, dump_dir, scope = "all";
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool have_seed = false;
  double tol = 1e-3;

  auto* prep = app.add_subcommand("prepare-data", "Materialize mixtures and cache shapes");
  prep->add_option("--manifest", manifest_path, "Mixture manifest")->required();
  prep->add_option("--out", out_dir, "Output directory")->required();
  prep->add_option("--config", config_path, "Run configuration (JSON)");
  prep->add_option("--set", overrides, "Override config keys (section.key=value)");
  prep->add_option("--seed", seed, "Override schedule.seed")->each([&](const std::string&) {
    have_seed = true;
  });

  auto* ts1 = app.add_subcommand("train-stage1", "Adversarial magnitude pretraining");
  ts1->add_option("--config", config_path, "Run configuration (JSON)");
  ts1->add_option("--manifest", manifest_path, "Training manifest")->required();
  ts1->add_option("--out", out_dir, "Checkpoint/log directory")->required();
  ts1->add_option("--resume", resume_path, "Resume from checkpoint");
  ts1->add_option("--set", overrides, "Override config keys (section.key=value)");

  auto* tj = app.add_subcommand("train-joint", "Joint training with the complex denoiser");
  tj->add_option("--config", config_path, "Run configuration (JSON)");
  tj->add_option("--manifest", manifest_path, "Training manifest")->required();
  tj->add_option("--out", out_dir, "Checkpoint/log directory")->required();
  tj->add_option("--from-stage1", from_stage1, "Finished stage-1 checkpoint");
  tj->add_option("--resume", resume_path, "Resume from a joint checkpoint");
  tj->add_option("--set", overrides, "Override config keys (section.key=value)");

  auto* enh = app.add_subcommand("enhance", "Enhance one WAV file");
  enh->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required();
  enh->add_option("--in", in_path, "Input WAV")->required();
  enh->add_option("--out", out_path, "Output WAV")->required();
  enh->add_option("--dump-spectrograms", dump_dir, "Directory for CSV/PNG spectrogram dumps");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint over a manifest");
  ev->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required();
  ev->add_option("--manifest", manifest_path, "Evaluation manifest")->required();
  ev->add_option("--out", out_dir, "Report/WAV output directory")->required();

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  gc->add_option("--scope", scope, "layers|losses|model|all")->capture_default_str();
  gc->add_option("--tol", tol, "Relative error tolerance")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prep->parsed())
      return cmd_prepare_data(workdir, config_path, overrides, manifest_path, out_dir, seed,
                              have_seed);
    if (ts1->parsed())
      return cmd_train(false, workdir, config_path, overrides, manifest_path, out_dir,
                       resume_path, from_stage1);
    if (tj->parsed())
      return cmd_train(true, workdir, config_path, overrides, manifest_path, out_dir, resume_path,
                       from_stage1);
    if (enh->parsed()) return cmd_enhance(workdir, ckpt_path, in_path, out_path, dump_dir);
    if (ev->parsed()) return cmd_evaluate(workdir, ckpt_path, manifest_path, out_dir);
    if (gc->parsed()) return cmd_gradcheck(scope, tol);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == Error::Kind::validation ? 1 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
