#include "sepipe/train/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace sepipe::train {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "SEPIPE_CKPT";
constexpr int kVersion = 1;

json read_meta(std::istream& f, const std::string& path) {
  std::string magic;
  int version = 0;
  f >> magic >> version;
  require(magic == kMagic, "not a checkpoint: " + path);
  require(version == kVersion,
          "incompatible checkpoint version " + std::to_string(version) + " in " + path);
  f.get();
  std::string meta_line;
  std::getline(f, meta_line);
  try {
    return json::parse(meta_line);
  } catch (const json::exception& e) {
    throw Error(Error::Kind::validation, "corrupt checkpoint meta in " + path + ": " + e.what());
  }
}

TrainState state_from_meta(const json& meta) {
  TrainState st;
  st.phase = meta.at("phase").get<std::string>();
  st.epoch = meta.at("epoch").get<int>();
  st.global_step = meta.at("global_step").get<int64_t>();
  st.config_json = meta.at("config").dump();
  return st;
}

}  // namespace

void save_checkpoint(const std::string& path, models::TwoStageModel& model, const Adam& opt,
                     const TrainState& state) {
  json meta;
  meta["phase"] = state.phase;
  meta["epoch"] = state.epoch;
  meta["global_step"] = state.global_step;
  meta["config"] = state.config_json.empty() ? json::object() : json::parse(state.config_json);

  nn::TensorStore store;
  model.save_tensors(store);
  opt.save_tensors(store);

  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    require_runtime(static_cast<bool>(f), "cannot open for writing: " + tmp);
    f << kMagic << " " << kVersion << "\n" << meta.dump() << "\n";
    store.save_stream(f);
    require_runtime(static_cast<bool>(f), "short write: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require_runtime(!ec, "cannot move checkpoint into place: " + path);
}

TrainState load_checkpoint(const std::string& path, models::TwoStageModel& model, Adam& opt) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot open checkpoint: " + path);
  json meta = read_meta(f, path);
  nn::TensorStore store = nn::TensorStore::load_stream(f, path);
  model.load_tensors(store);
  opt.load_tensors(store);
  return state_from_meta(meta);
}

TrainState peek_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot open checkpoint: " + path);
  return state_from_meta(read_meta(f, path));
}

TrainState load_model_only(const std::string& path, models::TwoStageModel& model) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot open checkpoint: " + path);
  json meta = read_meta(f, path);
  nn::TensorStore store = nn::TensorStore::load_stream(f, path);
  model.load_tensors(store);
  return state_from_meta(meta);
}

}  // namespace sepipe::train
