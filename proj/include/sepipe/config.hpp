#pragma once

#include <string>

#include "sepipe/losses.hpp"
#include "sepipe/models/pipeline.hpp"
#include "sepipe/train/schedule.hpp"

namespace sepipe {

// One declarative document covering every hyperparameter; validated
// exhaustively before any work starts (unknown keys are rejected).
struct RunConfig {
  dsp::StftParams stft;
  models::GeneratorConfig generator;
  models::DiscriminatorConfig discriminator;
  models::DcdConfig dcd;
  losses::LossWeights loss;
  train::OptimizerConfig optimizer;
  train::ScheduleConfig schedule;
  int sample_rate_hz = 16000;
  int width_divisor = 1;  // divides all channel lists (floored at 1)

  void validate() const;
  models::ModelSpec model_spec() const;  // with width_divisor applied

  std::string to_json_string() const;
};

RunConfig default_config();

// Parses JSON text; `overrides` are dotted `section.key=value` assignments
// applied before validation.
RunConfig parse_config(const std::string& json_text,
                       const std::vector<std::string>& overrides = {});
RunConfig load_config_file(const std::string& path,
                           const std::vector<std::string>& overrides = {});

}  // namespace sepipe
