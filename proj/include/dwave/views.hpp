#pragma once

#include <cstdint>
#include <span>

#include "dwave/conditioning.hpp"
#include "dwave/mel.hpp"

namespace dwave {

struct FeatureConfig {
  MelConfig mel;
  /// Rank of the lip-channel stand-in projection.
  std::size_t visual_rank = 8;
  std::uint64_t visual_seed = 0x5eed;

  static FeatureConfig desk();
};

/// Builds the four conditioning views from waveforms. Every view handed to
/// the denoiser is layer-normalized.
///   A   = LN(logmel(clean))
///   V   = LN(P A), P a fixed rank-r projection (stands in for lip video)
///   AV  = LN((A + V) / 2)
///   AVN = LN((LN(logmel(mixed)) + V) / 2)
class ViewBuilder {
 public:
  explicit ViewBuilder(FeatureConfig config);

  const FeatureConfig& config() const { return config_; }
  std::size_t feature_dim() const { return config_.mel.n_mels; }

  FeatureSequence audio_view(std::span<const double> clean) const;
  FeatureSequence visual_view(const FeatureSequence& audio) const;
  FeatureSequence audio_visual_view(const FeatureSequence& audio, const FeatureSequence& visual) const;
  FeatureSequence noisy_audio_visual_view(std::span<const double> mixed, const FeatureSequence& visual) const;

  /// A, V and AV of a clean utterance.
  ViewMap clean_views(std::span<const double> clean) const;

 private:
  FeatureConfig config_;
  VisualProjector projector_;
};

}  // namespace dwave
