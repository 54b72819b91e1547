#include "dwave/toml_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dwave {

namespace {

using nlohmann::json;

class Parser {
 public:
  Parser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  json value() {
    skip_space();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return string_value();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (starts_with("true")) return advance(4), json(true);
    if (starts_with("false")) return advance(5), json(false);
    return number();
  }

  void expect_end() {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] != '#') fail("unexpected trailing text");
  }

  bool at_end() {
    skip_space();
    return pos_ >= s_.size();
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("toml line " + std::to_string(line_) + ": " + what);
  }

 private:
  bool starts_with(std::string_view w) const { return s_.substr(pos_, w.size()) == w; }
  void advance(std::size_t n) { pos_ += n; }
  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  json string_value() {
    std::string out;
    ++pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("bad escape");
        switch (s_[pos_++]) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '\\': c = '\\'; break;
          case '"': c = '"'; break;
          default: fail("unsupported escape");
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json literal_string() {
    const auto end = s_.find('\'', pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated string");
    json out = std::string(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }

  json array() {
    json out = json::array();
    ++pos_;
    for (;;) {
      skip_space();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      out.push_back(value());
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == ',') ++pos_;
    }
  }

  json number() {
    std::size_t end = pos_;
    while (end < s_.size() && std::string_view("+-0123456789.eE_").find(s_[end]) != std::string_view::npos) ++end;
    std::string tok;
    for (char c : s_.substr(pos_, end - pos_)) {
      if (c != '_') tok.push_back(c);
    }
    if (tok.empty()) fail("expected a value");
    pos_ = end;
    if (tok[0] == '+') tok.erase(0, 1);
    if (tok.find_first_of(".eE") == std::string::npos) {
      std::int64_t v = 0;
      const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) fail("bad integer '" + tok + "'");
      return v;
    }
    double v = 0.0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) fail("bad number '" + tok + "'");
    return v;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_key(const std::string& key, std::size_t line) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string p;
  while (std::getline(ss, p, '.')) {
    p = trim(p);
    if (p.size() >= 2 && p.front() == '"' && p.back() == '"') p = p.substr(1, p.size() - 2);
    if (p.empty()) throw std::runtime_error("toml line " + std::to_string(line) + ": empty key");
    parts.push_back(p);
  }
  if (parts.empty()) throw std::runtime_error("toml line " + std::to_string(line) + ": empty key");
  return parts;
}

json& descend(json& root, const std::vector<std::string>& path, std::size_t count, std::size_t line) {
  json* node = &root;
  for (std::size_t i = 0; i < count; ++i) {
    json& next = (*node)[path[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) {
      throw std::runtime_error("toml line " + std::to_string(line) + ": '" + path[i] + "' is not a table");
    }
    node = &next;
  }
  return *node;
}

std::string scalar_toml(const json& v) {
  if (v.is_string()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) {
    std::string s = v.dump();
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
  }
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + scalar_toml(v[i]);
    return s + "]";
  }
  throw std::invalid_argument("cannot serialize value to toml: " + v.dump());
}

void emit_table(std::ostringstream& out, const json& table, const std::string& prefix) {
  for (const auto& [k, v] : table.items()) {
    if (!v.is_object()) out << k << " = " << scalar_toml(v) << '\n';
  }
  for (const auto& [k, v] : table.items()) {
    if (!v.is_object()) continue;
    const std::string name = prefix.empty() ? k : prefix + "." + k;
    out << "\n[" << name << "]\n";
    emit_table(out, v, name);
  }
}

}  // namespace

json parse_toml(std::string_view text) {
  json root = json::object();
  json* table = &root;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw std::runtime_error("toml line " + std::to_string(line_no) + ": bad header");
      const auto path = split_key(line.substr(1, close - 1), line_no);
      table = &descend(root, path, path.size(), line_no);
      Parser(std::string_view(line).substr(close + 1), line_no).expect_end();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("toml line " + std::to_string(line_no) + ": expected key = value");
    const auto path = split_key(line.substr(0, eq), line_no);
    json& parent = descend(*table, path, path.size() - 1, line_no);
    if (parent.contains(path.back())) {
      throw std::runtime_error("toml line " + std::to_string(line_no) + ": duplicate key '" + path.back() + "'");
    }
    Parser p(std::string_view(line).substr(eq + 1), line_no);
    parent[path.back()] = p.value();
    p.expect_end();
  }
  return root;
}

json load_toml(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_toml(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw std::invalid_argument("override must be key=value: " + std::string(assignment));
  const auto path = split_key(std::string(assignment.substr(0, eq)), 0);
  const std::string text = trim(assignment.substr(eq + 1));
  json value;
  try {
    Parser p(text, 0);
    value = p.value();
    p.expect_end();
  } catch (const std::exception&) {
    value = text;
  }
  json& parent = descend(config, path, path.size() - 1, 0);
  parent[path.back()] = value;
}

std::string to_toml(const json& config) {
  if (!config.is_object()) throw std::invalid_argument("config root must be a table");
  std::ostringstream out;
  emit_table(out, config, "");
  return out.str();
}

}  // namespace dwave
