#pragma once

#include <map>
#include <span>

#include "dwave/features.hpp"
#include "dwave/rng.hpp"

namespace dwave {

/// Per-frame normalization to zero mean, unit variance (eps 1e-5), no affine.
FeatureSequence layer_normalize(const FeatureSequence& f);

/// Uniform 1-based segment start on {1, ..., L - S + 1}.
std::size_t sample_segment(std::size_t num_frames, std::size_t segment_frames, Rng& rng);

/// Repeats the final frame until the sequence has at least min_frames rows.
FeatureSequence pad_by_repetition(const FeatureSequence& f, std::size_t min_frames);

struct ViewProbabilities {
  double av = 0.0;
  double a = 0.0;
  double v = 0.0;
  double avn = 0.0;

  /// Throws unless all entries are >= 0 and sum to 1 within 1e-9.
  void validate() const;
  double of(ConditionView view) const;

  static ViewProbabilities vocode() { return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0}; }
  static ViewProbabilities finetune_pairs() { return {0.0, 0.0, 0.0, 1.0}; }
  static ViewProbabilities finetune_clean_audio() { return {0.0, 1.0, 0.0, 0.0}; }
};

using ViewMap = std::map<ConditionView, FeatureSequence>;

/// Categorical draw over views; views with zero probability may be absent.
const FeatureSequence& select_condition_view(const ViewMap& views, const ViewProbabilities& probs, Rng& rng);

/// Draws only the view tag; lets callers build expensive views lazily.
ConditionView draw_condition_view(const ViewProbabilities& probs, Rng& rng);

/// Lip-channel stand-in: a fixed-seed rank-`rank` projection of the audio view.
class VisualProjector {
 public:
  VisualProjector(std::size_t feature_dim, std::size_t rank, std::uint64_t seed);
  FeatureSequence project(const FeatureSequence& audio_view) const;
  std::size_t feature_dim() const { return dim_; }

 private:
  std::size_t dim_;
  std::size_t rank_;
  std::vector<double> down_;  // rank x dim
  std::vector<double> up_;    // dim x rank
};

/// Audio-visual fusion used for the AV and AVN views: mean of the two streams.
FeatureSequence fuse_views(const FeatureSequence& audio, const FeatureSequence& visual, ConditionView tag);

}  // namespace dwave
