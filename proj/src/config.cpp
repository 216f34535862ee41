#include "senselm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "senselm/errors.hpp"
#include "senselm/text.hpp"

namespace senselm {

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view origin) {
  KeyValueConfig config;
  config.origin_ = std::string(origin);
  std::size_t line_number = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_number;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(config.origin_ + ":" + std::to_string(line_number) + ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError(config.origin_ + ":" + std::to_string(line_number) + ": empty key");
    }
    if (config.entries_.contains(key)) {
      throw ConfigError(config.origin_ + ":" + std::to_string(line_number) + ": duplicate key '" + key + "'");
    }
    config.entries_.emplace(std::move(key), std::move(value));
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

void KeyValueConfig::set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

bool KeyValueConfig::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

void KeyValueConfig::require_known(std::initializer_list<std::string_view> known) const {
  for (const auto& [key, value] : entries_) {
    bool found = false;
    for (std::string_view k : known) found = found || k == key;
    if (!found) throw ConfigError(origin_ + ": unknown key '" + key + "'");
  }
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), out);
  if (ec != std::errc() || ptr != value->data() + value->size()) {
    throw ConfigError(origin_ + ": key '" + std::string(key) + "' expects a number, got '" + *value + "'");
  }
  return out;
}

std::uint64_t KeyValueConfig::get_uint(std::string_view key, std::uint64_t fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), out);
  if (ec != std::errc() || ptr != value->data() + value->size()) {
    throw ConfigError(origin_ + ": key '" + std::string(key) + "' expects a non-negative integer, got '" + *value + "'");
  }
  return out;
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  auto value = get(key);
  if (!value) return fallback;
  if (*value == "true" || *value == "1") return true;
  if (*value == "false" || *value == "0") return false;
  throw ConfigError(origin_ + ": key '" + std::string(key) + "' expects true/false, got '" + *value + "'");
}

std::string KeyValueConfig::get_string(std::string_view key, std::string fallback) const {
  auto value = get(key);
  return value ? *value : std::move(fallback);
}

std::string KeyValueConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

}  // namespace senselm
