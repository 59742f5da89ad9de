#pragma once

#include <optional>
#include <string>

#include "loss.hpp"
#include "synth.hpp"
#include "train.hpp"

namespace must {

// Everything a run needs, after profile expansion and overrides. Unknown
// keys are rejected; profiles fill in the published per-dataset defaults.
struct RunConfig {
  std::string profile = "synth";
  uint64_t seed = 1;
  int32_t embed_dim = 64;
  std::string ablation = "full";  // full | base | components | composition | focal
  LossConfig loss;
  TrainParams train;  // seed/embed_dim mirrors filled during resolution
  SynthConfig synth;
};

// Merges defaults(profile) <- config file <- overrides, then validates and
// expands the per-class deviation scales. Diagnostics carry line numbers.
RunConfig resolve_config(const std::optional<std::string>& file_text,
                         const std::string& overrides_text);

// Canonical resolved form; re-resolving the output reproduces the config.
std::string serialize_config(const RunConfig& cfg);

// Applies the ablation switch to the loss terms.
LossConfig effective_loss_config(const RunConfig& cfg);

}  // namespace must
