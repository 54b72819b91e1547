#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dwave/features.hpp"

namespace dwave {

enum class InterfererKind { None, Speech, Noise };

std::string_view to_string(InterfererKind kind);
InterfererKind parse_interferer_kind(std::string_view name);

struct UtteranceRecord {
  std::string id;
  std::string clean_audio_path;
  std::optional<std::string> mixed_audio_path;
  std::map<ConditionView, std::string> feature_paths;
  std::optional<double> quality_score;
  InterfererKind interferer_kind = InterfererKind::None;
  std::optional<double> snr_db;
  double duration_s = 0.0;
  /// Source interferer for on-the-fly mixing.
  std::optional<std::string> interferer_audio_path;
  /// Written by enhance/resynth; read by eval.
  std::optional<std::string> enhanced_audio_path;

  /// Throws on violated record invariants (empty id/path, snr without interferer...).
  void validate() const;
};

using Manifest = std::vector<UtteranceRecord>;

/// JSON-lines, one record per line. Relative paths are kept as written.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

std::string record_to_json_line(const UtteranceRecord& record);
UtteranceRecord record_from_json_line(const std::string& line);

/// Resolves a manifest path relative to the manifest's directory.
std::filesystem::path resolve_path(const std::filesystem::path& manifest_dir, const std::string& p);

}  // namespace dwave
