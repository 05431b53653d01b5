#include "sepipe/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sepipe {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& section,
                    const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it)
    require(known.count(it.key()) > 0, "config: unknown key '" +
                                           (section.empty() ? it.key() : section + "." + it.key()) +
                                           "'");
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

json to_json(const RunConfig& c) {
  json j;
  j["stft"] = {{"win_len", c.stft.win_len}, {"hop", c.stft.hop}, {"fft_len", c.stft.fft_len}};
  j["generator"] = {{"down_channels", c.generator.down_channels},
                    {"dra_blocks", c.generator.dra_blocks},
                    {"dra_dilations", c.generator.dra_dilations},
                    {"kernel", {c.generator.kernel_t, c.generator.kernel_f}},
                    {"stride", {c.generator.stride_t, c.generator.stride_f}}};
  j["discriminator"] = {{"channels", c.discriminator.channels},
                        {"kernel", {c.discriminator.kernel_t, c.discriminator.kernel_f}},
                        {"stride", {c.discriminator.stride_t, c.discriminator.stride_f}},
                        {"spectral_norm", c.discriminator.spectral_norm}};
  j["dcd"] = {{"encoder_channels", c.dcd.encoder_channels},
              {"ctfsa_blocks", c.dcd.ctfsa_blocks},
              {"kernel", {c.dcd.kernel_t, c.dcd.kernel_f}},
              {"stride", {c.dcd.stride_t, c.dcd.stride_f}}};
  j["loss"] = {{"lambda_cycle", c.loss.lambda_cycle},
               {"lambda_id", c.loss.lambda_id},
               {"gamma", c.loss.gamma}};
  j["optimizer"] = {{"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps},
                    {"grad_clip", c.optimizer.grad_clip},
                    {"grad_clip_norm", c.optimizer.grad_clip_norm}};
  j["schedule"] = {{"stage1_epochs", c.schedule.stage1_epochs},
                   {"identity_epochs", c.schedule.identity_epochs},
                   {"total_epochs", c.schedule.total_epochs},
                   {"decay_start_epoch", c.schedule.decay_start_epoch},
                   {"lr_d1", c.schedule.lr_d1},
                   {"lr_g1", c.schedule.lr_g1},
                   {"lr_dcd", c.schedule.lr_dcd},
                   {"lr_cyclegan_joint", c.schedule.lr_cyclegan_joint},
                   {"batch_size", c.schedule.batch_size},
                   {"crop_frames", c.schedule.crop_frames},
                   {"seed", c.schedule.seed}};
  j["sample_rate_hz"] = c.sample_rate_hz;
  j["width_divisor"] = c.width_divisor;
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  reject_unknown(j, "",
                 {"stft", "generator", "discriminator", "dcd", "loss", "optimizer", "schedule",
                  "sample_rate_hz", "width_divisor"});
  if (j.contains("stft")) {
    const json& s = j["stft"];
    reject_unknown(s, "stft", {"win_len", "hop", "fft_len", "window"});
    get_to(s, "win_len", c.stft.win_len);
    get_to(s, "hop", c.stft.hop);
    get_to(s, "fft_len", c.stft.fft_len);
    if (s.contains("window"))
      require(s["window"] == "hann", "config: only the hann window is supported");
  }
  if (j.contains("generator")) {
    const json& s = j["generator"];
    reject_unknown(s, "generator",
                   {"down_channels", "dra_blocks", "dra_dilations", "kernel", "stride"});
    get_to(s, "down_channels", c.generator.down_channels);
    get_to(s, "dra_blocks", c.generator.dra_blocks);
    get_to(s, "dra_dilations", c.generator.dra_dilations);
    if (s.contains("kernel")) {
      c.generator.kernel_t = s["kernel"][0];
      c.generator.kernel_f = s["kernel"][1];
    }
    if (s.contains("stride")) {
      c.generator.stride_t = s["stride"][0];
      c.generator.stride_f = s["stride"][1];
    }
  }
  if (j.contains("discriminator")) {
    const json& s = j["discriminator"];
    reject_unknown(s, "discriminator", {"channels", "kernel", "stride", "spectral_norm"});
    get_to(s, "channels", c.discriminator.channels);
    get_to(s, "spectral_norm", c.discriminator.spectral_norm);
    if (s.contains("kernel")) {
      c.discriminator.kernel_t = s["kernel"][0];
      c.discriminator.kernel_f = s["kernel"][1];
    }
    if (s.contains("stride")) {
      c.discriminator.stride_t = s["stride"][0];
      c.discriminator.stride_f = s["stride"][1];
    }
  }
  if (j.contains("dcd")) {
    const json& s = j["dcd"];
    reject_unknown(s, "dcd", {"encoder_channels", "ctfsa_blocks", "kernel", "stride"});
    get_to(s, "encoder_channels", c.dcd.encoder_channels);
    get_to(s, "ctfsa_blocks", c.dcd.ctfsa_blocks);
    if (s.contains("kernel")) {
      c.dcd.kernel_t = s["kernel"][0];
      c.dcd.kernel_f = s["kernel"][1];
    }
    if (s.contains("stride")) {
      c.dcd.stride_t = s["stride"][0];
      c.dcd.stride_f = s["stride"][1];
    }
  }
  if (j.contains("loss")) {
    const json& s = j["loss"];
    reject_unknown(s, "loss", {"lambda_cycle", "lambda_id", "gamma"});
    get_to(s, "lambda_cycle", c.loss.lambda_cycle);
    get_to(s, "lambda_id", c.loss.lambda_id);
    get_to(s, "gamma", c.loss.gamma);
  }
  if (j.contains("optimizer")) {
    const json& s = j["optimizer"];
    reject_unknown(s, "optimizer", {"beta1", "beta2", "eps", "grad_clip", "grad_clip_norm"});
    get_to(s, "beta1", c.optimizer.beta1);
    get_to(s, "beta2", c.optimizer.beta2);
    get_to(s, "eps", c.optimizer.eps);
    get_to(s, "grad_clip", c.optimizer.grad_clip);
    get_to(s, "grad_clip_norm", c.optimizer.grad_clip_norm);
  }
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    reject_unknown(s, "schedule",
                   {"stage1_epochs", "identity_epochs", "total_epochs", "decay_start_epoch",
                    "lr_d1", "lr_g1", "lr_dcd", "lr_cyclegan_joint", "batch_size", "crop_frames",
                    "seed"});
    get_to(s, "stage1_epochs", c.schedule.stage1_epochs);
    get_to(s, "identity_epochs", c.schedule.identity_epochs);
    get_to(s, "total_epochs", c.schedule.total_epochs);
    get_to(s, "decay_start_epoch", c.schedule.decay_start_epoch);
    get_to(s, "lr_d1", c.schedule.lr_d1);
    get_to(s, "lr_g1", c.schedule.lr_g1);
    get_to(s, "lr_dcd", c.schedule.lr_dcd);
    get_to(s, "lr_cyclegan_joint", c.schedule.lr_cyclegan_joint);
    get_to(s, "batch_size", c.schedule.batch_size);
    get_to(s, "crop_frames", c.schedule.crop_frames);
    get_to(s, "seed", c.schedule.seed);
  }
  get_to(j, "sample_rate_hz", c.sample_rate_hz);
  get_to(j, "width_divisor", c.width_divisor);
  return c;
}

json set_dotted(json j, const std::string& assignment) {
  auto eq = assignment.find('=');
  require(eq != std::string::npos, "override must look like section.key=value: " + assignment);
  std::string path = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings
  }
  json* cur = &j;
  std::istringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  require(!parts.empty(), "override has an empty key: " + assignment);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) cur = &(*cur)[parts[i]];
  (*cur)[parts.back()] = parsed;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  stft.validate();
  generator.validate();
  discriminator.validate();
  dcd.validate();
  loss.validate();
  optimizer.validate();
  schedule.validate();
  require(sample_rate_hz > 0, "config: sample_rate_hz must be positive");
  require(width_divisor >= 1, "config: width_divisor must be >= 1");
}

models::ModelSpec RunConfig::model_spec() const {
  models::ModelSpec spec;
  spec.stft = stft;
  spec.generator = generator;
  spec.discriminator = discriminator;
  spec.dcd = dcd;
  spec.init_seed = schedule.seed;
  auto shrink = [this](std::vector<int>& v) {
    for (int& c : v) c = std::max(1, c / width_divisor);
  };
  shrink(spec.generator.down_channels);
  shrink(spec.dcd.encoder_channels);
  // The final discriminator layer stays at one channel.
  for (std::size_t i = 0; i + 1 < spec.discriminator.channels.size(); ++i)
    spec.discriminator.channels[i] = std::max(1, spec.discriminator.channels[i] / width_divisor);
  return spec;
}

std::string RunConfig::to_json_string() const { return to_json(*this).dump(2); }

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Error::Kind::validation, std::string("config: invalid JSON: ") + e.what());
  }
  for (const std::string& o : overrides) j = set_dotted(j, o);
  RunConfig c;
  try {
    c = from_json(j);
  } catch (const json::exception& e) {
    throw Error(Error::Kind::validation, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  require(static_cast<bool>(f), "cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

}  // namespace sepipe
