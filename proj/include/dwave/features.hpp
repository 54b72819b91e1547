#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dwave {

enum class ConditionView : std::uint8_t { AV = 0, A = 1, V = 2, AVN = 3 };

std::string_view to_string(ConditionView view);
ConditionView parse_view(std::string_view name);

/// L x F frame-level conditioning matrix, row-major (one row per frame).
struct FeatureSequence {
  std::size_t num_frames = 0;
  std::size_t dim = 0;
  double frame_rate = 25.0;
  ConditionView view = ConditionView::A;
  std::string utterance_id;
  std::vector<float> values;

  FeatureSequence() = default;
  FeatureSequence(std::size_t frames, std::size_t feature_dim, ConditionView v = ConditionView::A,
                  double rate = 25.0);

  float& at(std::size_t frame, std::size_t k) { return values[frame * dim + k]; }
  float at(std::size_t frame, std::size_t k) const { return values[frame * dim + k]; }
  std::span<const float> frame(std::size_t l) const { return {values.data() + l * dim, dim}; }
  std::span<float> frame(std::size_t l) { return {values.data() + l * dim, dim}; }

  bool all_finite() const;

  /// Frames [start, start + count), 0-based.
  FeatureSequence slice(std::size_t start, std::size_t count) const;
};

/// Feature container (.featbin): "AVFT", u32 version, u32 L, u32 F,
/// f32 frame_rate, u8 view tag, then L*F little-endian f32 row-major.
inline constexpr std::uint32_t kFeatbinVersion = 1;

void write_featbin(const std::filesystem::path& path, const FeatureSequence& features);

/// Reads a .featbin. expected_dim == 0 accepts whatever width the file carries.
FeatureSequence load_precomputed_features(const std::filesystem::path& path,
                                          std::size_t expected_dim = 0);

}  // namespace dwave
