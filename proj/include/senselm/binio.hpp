#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace senselm {

/// 64-bit FNV-1a, used for artifact content hashes stored in file headers.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) noexcept {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= 0x100000001B3ULL;
    }
  }
  void update(std::string_view text) noexcept { update(text.data(), text.size()); }
  template <typename T>
  void update_value(const T& value) noexcept {
    update(&value, sizeof(T));
  }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

// Little-endian byte sink. All multi-byte values are written LE regardless of
// host order.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::string_view raw) { buffer_.append(raw); }
  void str(std::string_view s);  // u32 length prefix
  const std::string& buffer() const noexcept { return buffer_; }
  void write_file(const std::filesystem::path& path) const;

 private:
  std::string buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}
  static ByteReader from_file(const std::filesystem::path& path);

  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string bytes(std::size_t count);
  std::string str();
  bool at_end() const noexcept { return pos_ == data_.size(); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t count) const;
  std::string data_;
  std::size_t pos_ = 0;
};

/// Shared file container: magic "SBLM", u32 format version, u32 field count,
/// then length-prefixed key/value string pairs. The payload follows.
inline constexpr std::string_view kFileMagic = "SBLM";
inline constexpr std::uint32_t kFormatVersion = 1;

struct HeaderField {
  std::string key;
  std::string value;
};

void write_header(ByteWriter& out, std::span<const HeaderField> fields);
std::vector<HeaderField> read_header(ByteReader& in);
const std::string& header_value(std::span<const HeaderField> fields, std::string_view key);

}  // namespace senselm
