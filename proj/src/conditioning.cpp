#include "dwave/conditioning.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dwave {

FeatureSequence layer_normalize(const FeatureSequence& f) {
  if (f.dim < 2) throw std::invalid_argument("layer_normalize needs at least two feature dims");
  FeatureSequence out = f;
  const auto n = static_cast<double>(f.dim);
  for (std::size_t l = 0; l < f.num_frames; ++l) {
    const auto row = f.frame(l);
    double mean = 0.0;
    for (float x : row) mean += x;
    mean /= n;
    double var = 0.0;
    for (float x : row) var += (x - mean) * (x - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    auto dst = out.frame(l);
    for (std::size_t k = 0; k < f.dim; ++k) dst[k] = static_cast<float>((row[k] - mean) * inv);
  }
  return out;
}

std::size_t sample_segment(std::size_t num_frames, std::size_t segment_frames, Rng& rng) {
  if (segment_frames < 1) throw std::invalid_argument("segment length must be >= 1");
  if (num_frames < segment_frames) {
    throw std::invalid_argument("sequence of " + std::to_string(num_frames) +
                                " frames is shorter than segment length " + std::to_string(segment_frames));
  }
  return 1 + uniform_index(rng, num_frames - segment_frames + 1);
}

FeatureSequence pad_by_repetition(const FeatureSequence& f, std::size_t min_frames) {
  if (f.num_frames == 0) throw std::invalid_argument("cannot pad an empty feature sequence");
  if (f.num_frames >= min_frames) return f;
  FeatureSequence out(min_frames, f.dim, f.view, f.frame_rate);
  out.utterance_id = f.utterance_id;
  std::copy(f.values.begin(), f.values.end(), out.values.begin());
  const auto last = f.frame(f.num_frames - 1);
  for (std::size_t l = f.num_frames; l < min_frames; ++l) std::copy(last.begin(), last.end(), out.frame(l).begin());
  return out;
}

void ViewProbabilities::validate() const {
  for (double p : {av, a, v, avn}) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("view probabilities must be >= 0");
  }
  const double sum = av + a + v + avn;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("view probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

double ViewProbabilities::of(ConditionView view) const {
  switch (view) {
    case ConditionView::AV: return av;
    case ConditionView::A: return a;
    case ConditionView::V: return v;
    case ConditionView::AVN: return avn;
  }
  return 0.0;
}

ConditionView draw_condition_view(const ViewProbabilities& probs, Rng& rng) {
  probs.validate();
  const double u = uniform(rng, 0.0, 1.0);
  double acc = 0.0;
  ConditionView last_positive = ConditionView::AV;
  for (auto view : {ConditionView::AV, ConditionView::A, ConditionView::V, ConditionView::AVN}) {
    const double p = probs.of(view);
    if (p <= 0.0) continue;
    last_positive = view;
    acc += p;
    if (u < acc) return view;
  }
  return last_positive;
}

const FeatureSequence& select_condition_view(const ViewMap& views, const ViewProbabilities& probs, Rng& rng) {
  probs.validate();
  for (auto view : {ConditionView::AV, ConditionView::A, ConditionView::V, ConditionView::AVN}) {
    if (probs.of(view) > 0.0 && !views.contains(view)) {
      throw std::invalid_argument("view " + std::string(to_string(view)) +
                                  " has positive probability but is not available");
    }
  }
  return views.at(draw_condition_view(probs, rng));
}

VisualProjector::VisualProjector(std::size_t feature_dim, std::size_t rank, std::uint64_t seed)
    : dim_(feature_dim), rank_(rank), down_(rank * feature_dim), up_(feature_dim * rank) {
  if (rank == 0 || rank > feature_dim) throw std::invalid_argument("projection rank must lie in [1, F]");
  Rng rng(seed);
  const double scale_down = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  const double scale_up = 1.0 / std::sqrt(static_cast<double>(rank));
  for (auto& w : down_) w = uniform(rng, -1.0, 1.0) * std::sqrt(3.0) * scale_down;
  for (auto& w : up_) w = uniform(rng, -1.0, 1.0) * std::sqrt(3.0) * scale_up;
}

FeatureSequence VisualProjector::project(const FeatureSequence& audio) const {
  if (audio.dim != dim_) throw std::invalid_argument("visual projector dim mismatch");
  FeatureSequence out(audio.num_frames, dim_, ConditionView::V, audio.frame_rate);
  out.utterance_id = audio.utterance_id;
  std::vector<double> low(rank_);
  for (std::size_t l = 0; l < audio.num_frames; ++l) {
    const auto row = audio.frame(l);
    for (std::size_t r = 0; r < rank_; ++r) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) acc += down_[r * dim_ + k] * row[k];
      low[r] = acc;
    }
    auto dst = out.frame(l);
    for (std::size_t k = 0; k < dim_; ++k) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rank_; ++r) acc += up_[k * rank_ + r] * low[r];
      dst[k] = static_cast<float>(acc);
    }
  }
  return out;
}

FeatureSequence fuse_views(const FeatureSequence& audio, const FeatureSequence& visual, ConditionView tag) {
  if (audio.dim != visual.dim) throw std::invalid_argument("fuse_views: dim mismatch");
  const std::size_t frames = std::min(audio.num_frames, visual.num_frames);
  FeatureSequence out(frames, audio.dim, tag, audio.frame_rate);
  out.utterance_id = audio.utterance_id;
  for (std::size_t i = 0; i < frames * audio.dim; ++i) {
    out.values[i] = 0.5f * (audio.values[i] + visual.values[i]);
  }
  return out;
}

}  // namespace dwave
