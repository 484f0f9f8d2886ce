#pragma once

// Line-oriented key=value configuration. '#' starts a comment, blank lines
// are ignored, unknown keys are rejected. Every key has a default; see
// default_config_text() for the full list.

#include <string>
#include <string_view>

#include "rawnet/model.hpp"
#include "rawnet/signal.hpp"
#include "rawnet/trainer.hpp"
#include "rawnet/voder.hpp"

namespace rawnet {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  OptimizerConfig optimizer;
  SamplerConfig sampler;
  VadConfig vad;
};

/// Applies one setting; throws ConfigError for unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies every line of `text` on top of `base`.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// "key=value" split with whitespace trimmed; throws ConfigError if there is no '='.
std::pair<std::string, std::string> split_setting(std::string_view line);

std::string model_config_text(const ModelConfig& cfg);
std::string optimizer_config_text(const OptimizerConfig& cfg);
std::string train_config_text(const TrainConfig& cfg);
std::string config_text(const RunConfig& cfg);
inline std::string default_config_text() { return config_text(RunConfig{}); }

/// Shortest text that parses back to the same double.
std::string format_real(Real v);

}  // namespace rawnet
