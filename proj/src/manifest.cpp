#include "dwave/manifest.hpp"
#include "dwave/binary_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dwave {

using nlohmann::json;

std::string_view to_string(InterfererKind kind) {
  switch (kind) {
    case InterfererKind::None: return "None";
    case InterfererKind::Speech: return "Speech";
    case InterfererKind::Noise: return "Noise";
  }
  return "?";
}

InterfererKind parse_interferer_kind(std::string_view name) {
  if (name == "None" || name == "none") return InterfererKind::None;
  if (name == "Speech" || name == "speech") return InterfererKind::Speech;
  if (name == "Noise" || name == "noise") return InterfererKind::Noise;
  throw std::invalid_argument("unknown interferer kind '" + std::string(name) + "'");
}

void UtteranceRecord::validate() const {
  if (id.empty()) throw std::invalid_argument("record without id");
  if (clean_audio_path.empty()) throw std::invalid_argument(id + ": empty clean_audio_path");
  if (mixed_audio_path && mixed_audio_path->empty()) throw std::invalid_argument(id + ": empty mixed_audio_path");
  for (const auto& [view, p] : feature_paths) {
    if (p.empty()) throw std::invalid_argument(id + ": empty feature path for view " + std::string(to_string(view)));
  }
  if (snr_db && interferer_kind == InterfererKind::None) {
    throw std::invalid_argument(id + ": snr_db given but interferer_kind is none");
  }
  // Interferer-pool entries carry a kind without an SNR; a mixture needs both.
  if (mixed_audio_path && interferer_kind != InterfererKind::None && !snr_db) {
    throw std::invalid_argument(id + ": mixed audio with an interferer kind needs snr_db");
  }
}

std::string record_to_json_line(const UtteranceRecord& r) {
  json j;
  j["id"] = r.id;
  j["clean_audio_path"] = r.clean_audio_path;
  if (r.mixed_audio_path) j["mixed_audio_path"] = *r.mixed_audio_path;
  if (!r.feature_paths.empty()) {
    json fp = json::object();
    for (const auto& [view, p] : r.feature_paths) fp[std::string(to_string(view))] = p;
    j["feature_paths"] = fp;
  }
  if (r.quality_score) j["quality_score"] = *r.quality_score;
  j["interferer_kind"] = std::string(to_string(r.interferer_kind));
  if (r.snr_db) j["snr_db"] = *r.snr_db;
  j["duration_s"] = r.duration_s;
  if (r.interferer_audio_path) j["interferer_audio_path"] = *r.interferer_audio_path;
  if (r.enhanced_audio_path) j["enhanced_audio_path"] = *r.enhanced_audio_path;
  return j.dump();
}

UtteranceRecord record_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  UtteranceRecord r;
  r.id = j.at("id").get<std::string>();
  r.clean_audio_path = j.at("clean_audio_path").get<std::string>();
  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (j.contains(key) && !j[key].is_null()) return j[key].get<std::string>();
    return std::nullopt;
  };
  auto opt_number = [&](const char* key) -> std::optional<double> {
    if (j.contains(key) && !j[key].is_null()) return j[key].get<double>();
    return std::nullopt;
  };
  r.mixed_audio_path = opt_string("mixed_audio_path");
  if (j.contains("feature_paths") && !j["feature_paths"].is_null()) {
    for (const auto& [k, v] : j["feature_paths"].items()) r.feature_paths[parse_view(k)] = v.get<std::string>();
  }
  r.quality_score = opt_number("quality_score");
  if (j.contains("interferer_kind")) r.interferer_kind = parse_interferer_kind(j["interferer_kind"].get<std::string>());
  r.snr_db = opt_number("snr_db");
  r.duration_s = j.value("duration_s", 0.0);
  r.interferer_audio_path = opt_string("interferer_audio_path");
  r.enhanced_audio_path = opt_string("enhanced_audio_path");
  r.validate();
  return r;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::string out;
  for (const auto& r : manifest) {
    out += record_to_json_line(r);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::filesystem::path resolve_path(const std::filesystem::path& manifest_dir, const std::string& p) {
  std::filesystem::path fp(p);
  if (fp.is_absolute() || manifest_dir.empty()) return fp;
  return manifest_dir / fp;
}

}  // namespace dwave
