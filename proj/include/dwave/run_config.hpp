#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "dwave/denoiser.hpp"
#include "dwave/schedule.hpp"
#include "dwave/synthesis.hpp"
#include "dwave/trainer.hpp"
#include "dwave/views.hpp"

namespace dwave {

/// Everything a subcommand needs, resolved from preset defaults, an optional
/// TOML file and --set overrides (in that order).
struct RunConfig {
  FeatureConfig features;
  DenoiserConfig denoiser;
  std::string schedule_kind = "linear";
  std::size_t schedule_steps = 1000;
  double beta_start = 1e-6;
  double beta_end = 0.01;
  TrainConfig train;
  TrainConfig finetune;
  SynthesisOptions synthesis;

  NoiseSchedule schedule() const;
};

/// "paper" (16 kHz, 640-sample hop) or "desk" (8 kHz toy scale).
nlohmann::json default_config(std::string_view preset);

/// Missing keys fall back to the preset named by the `preset` key.
RunConfig resolve_run_config(const nlohmann::json& config);

}  // namespace dwave
