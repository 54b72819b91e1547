#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace dwave {

/// Parses the TOML subset used by run configs: [section] / [a.b] headers,
/// key = value with strings, integers, floats, booleans and flat arrays,
/// and # comments. Tables come back as nested JSON objects.
nlohmann::json parse_toml(std::string_view text);
nlohmann::json load_toml(const std::filesystem::path& path);

/// Applies "dotted.key=value"; the value uses TOML scalar syntax, with bare
/// words taken as strings.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Serializes nested objects back to TOML, tables after plain keys.
std::string to_toml(const nlohmann::json& config);

}  // namespace dwave
