#pragma once

#include <filesystem>
#include <string>

#include "dwave/denoiser.hpp"
#include "dwave/optimizer.hpp"

namespace dwave {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  DenoiserParams params;
  AdamState optimizer;
  /// Free-form JSON describing the run that produced the checkpoint.
  std::string run_config_json = "{}";
  std::uint64_t step = 0;
};

/// "DWCK", u32 version, u32-length JSON header (denoiser config, step, Adam
/// hyperparameters, run config), u32 tensor count, then per tensor: name,
/// u32 rank, u32 dims, little-endian f32 values. Written atomically.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws with a field-by-field diagnostic if the architectures differ.
void require_compatible(const DenoiserConfig& checkpoint, const DenoiserConfig& expected);

std::string denoiser_config_to_json(const DenoiserConfig& config);
DenoiserConfig denoiser_config_from_json(const std::string& json_text);

}  // namespace dwave
