#pragma once

#include <string_view>
#include <vector>

#include "dwave/diffusion.hpp"

namespace dwave {

struct SynthesisOptions {
  SamplerConfig sampler;
  std::size_t segment_frames = 24;
};

/// 0-based start frames of S-frame windows over L frames. Consecutive windows
/// share one frame; the last window is aligned to the end.
std::vector<std::size_t> chunk_starts(std::size_t num_frames, std::size_t segment_frames);

/// Generates L * hop samples for an L-frame condition by sampling S-frame
/// windows and cross-fading the seams over one hop. Each window's noise is
/// seeded from (sampler.seed, utterance_id, window index).
Signal synthesize(const NoisePredictor& model, const FeatureSequence& c, const NoiseSchedule& schedule,
                  const SynthesisOptions& options, std::string_view utterance_id, std::size_t hop);

/// Zero-pads or truncates to num_samples and multiplies by gain.
Signal fit_output(Signal y, std::size_t num_samples, double gain);

}  // namespace dwave
