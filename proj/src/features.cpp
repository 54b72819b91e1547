#include "dwave/features.hpp"
#include "dwave/binary_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dwave {

std::string_view to_string(ConditionView view) {
  switch (view) {
    case ConditionView::AV: return "AV";
    case ConditionView::A: return "A";
    case ConditionView::V: return "V";
    case ConditionView::AVN: return "AVN";
  }
  return "?";
}

ConditionView parse_view(std::string_view name) {
  if (name == "AV" || name == "av") return ConditionView::AV;
  if (name == "A" || name == "a") return ConditionView::A;
  if (name == "V" || name == "v") return ConditionView::V;
  if (name == "AVN" || name == "avn") return ConditionView::AVN;
  throw std::invalid_argument("unknown condition view '" + std::string(name) + "'");
}

FeatureSequence::FeatureSequence(std::size_t frames, std::size_t feature_dim, ConditionView v,
                                 double rate)
    : num_frames(frames), dim(feature_dim), frame_rate(rate), view(v), values(frames * feature_dim) {}

bool FeatureSequence::all_finite() const {
  for (float x : values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

FeatureSequence FeatureSequence::slice(std::size_t start, std::size_t count) const {
  if (start + count > num_frames) throw std::out_of_range("feature slice past end of sequence");
  FeatureSequence out(count, dim, view, frame_rate);
  out.utterance_id = utterance_id;
  std::copy(values.begin() + static_cast<std::ptrdiff_t>(start * dim),
            values.begin() + static_cast<std::ptrdiff_t>((start + count) * dim), out.values.begin());
  return out;
}

void write_featbin(const std::filesystem::path& path, const FeatureSequence& f) {
  if (f.values.size() != f.num_frames * f.dim) {
    throw std::invalid_argument("feature matrix size does not match L x F");
  }
  BinaryWriter w;
  w.bytes("AVFT", 4);
  w.u32(kFeatbinVersion);
  w.u32(static_cast<std::uint32_t>(f.num_frames));
  w.u32(static_cast<std::uint32_t>(f.dim));
  w.f32(static_cast<float>(f.frame_rate));
  w.u8(static_cast<std::uint8_t>(f.view));
  for (float v : f.values) w.f32(v);
  w.commit_atomic(path);
}

FeatureSequence load_precomputed_features(const std::filesystem::path& path,
                                          std::size_t expected_dim) {
  BinaryReader r(read_file_bytes(path), path.string());
  if (r.bytes(4) != "AVFT") throw std::runtime_error(path.string() + ": bad featbin magic");
  const auto version = r.u32();
  if (version != kFeatbinVersion) {
    throw std::runtime_error(path.string() + ": unsupported featbin version " +
                             std::to_string(version));
  }
  const auto frames = r.u32();
  const auto dim = r.u32();
  const float rate = r.f32();
  const auto tag = r.u8();
  if (tag > 3) throw std::runtime_error(path.string() + ": bad view tag");
  if (frames == 0 || dim == 0) throw std::runtime_error(path.string() + ": empty feature matrix");
  if (expected_dim != 0 && dim != expected_dim) {
    throw std::runtime_error(path.string() + ": feature dim " + std::to_string(dim) +
                             " does not match expected " + std::to_string(expected_dim));
  }
  FeatureSequence f(frames, dim, static_cast<ConditionView>(tag), rate);
  for (auto& v : f.values) v = r.f32();
  if (!r.at_end()) throw std::runtime_error(path.string() + ": trailing bytes in featbin");
  if (!f.all_finite()) throw std::runtime_error(path.string() + ": non-finite feature values");
  f.utterance_id = path.stem().string();
  return f;
}

}  // namespace dwave
