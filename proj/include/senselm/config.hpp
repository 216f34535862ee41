#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace senselm {

/// Flat UTF-8 `key = value` file. Blank lines and lines starting with '#'
/// are ignored. Consumers declare the keys they understand; anything else is
/// rejected by require_known().
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  bool contains(std::string_view key) const;
  void require_known(std::initializer_list<std::string_view> known) const;

  std::optional<std::string> get(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::string get_string(std::string_view key, std::string fallback) const;

  const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return entries_; }
  /// Canonical `key=value\n` rendering, sorted by key.
  std::string canonical_text() const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::string origin_;
};

}  // namespace senselm
