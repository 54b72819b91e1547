#include "dwave/views.hpp"

namespace dwave {

FeatureConfig FeatureConfig::desk() {
  FeatureConfig c;
  c.mel.sample_rate = 8000.0;
  c.mel.n_mels = 80;
  c.mel.hop = 64;
  c.mel.window = 128;
  c.mel.n_fft = 512;
  return c;
}

ViewBuilder::ViewBuilder(FeatureConfig config)
    : config_(config), projector_(config.mel.n_mels, config.visual_rank, config.visual_seed) {}

FeatureSequence ViewBuilder::audio_view(std::span<const double> clean) const {
  return layer_normalize(extract_melproxy_features(clean, config_.mel, ConditionView::A));
}

FeatureSequence ViewBuilder::visual_view(const FeatureSequence& audio) const {
  auto v = layer_normalize(projector_.project(audio));
  v.view = ConditionView::V;
  return v;
}

FeatureSequence ViewBuilder::audio_visual_view(const FeatureSequence& audio, const FeatureSequence& visual) const {
  return layer_normalize(fuse_views(audio, visual, ConditionView::AV));
}

FeatureSequence ViewBuilder::noisy_audio_visual_view(std::span<const double> mixed, const FeatureSequence& visual) const {
  const auto noisy = layer_normalize(extract_melproxy_features(mixed, config_.mel, ConditionView::AVN));
  return layer_normalize(fuse_views(noisy, visual, ConditionView::AVN));
}

ViewMap clean_views_impl(const ViewBuilder& b, std::span<const double> clean) {
  ViewMap m;
  auto a = b.audio_view(clean);
  auto v = b.visual_view(a);
  m[ConditionView::AV] = b.audio_visual_view(a, v);
  m[ConditionView::V] = std::move(v);
  m[ConditionView::A] = std::move(a);
  return m;
}

ViewMap ViewBuilder::clean_views(std::span<const double> clean) const { return clean_views_impl(*this, clean); }

}  // namespace dwave
