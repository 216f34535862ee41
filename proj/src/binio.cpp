#include "senselm/binio.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "senselm/errors.hpp"

namespace senselm {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(raw), sizeof(T));
}

template <typename T>
T get_le(const char* src) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) { put_le(buffer_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buffer_, v); }
void ByteWriter::f32(float v) { put_le(buffer_, std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { put_le(buffer_, std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buffer_.append(s);
}

void ByteWriter::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ByteReader(std::move(data));
}

void ByteReader::need(std::size_t count) const {
  if (data_.size() - pos_ < count) throw FormatError("unexpected end of file");
}

std::uint32_t ByteReader::u32() {
  need(4);
  auto v = get_le<std::uint32_t>(data_.data() + pos_);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  auto v = get_le<std::uint64_t>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::bytes(std::size_t count) {
  need(count);
  std::string out = data_.substr(pos_, count);
  pos_ += count;
  return out;
}

std::string ByteReader::str() { return bytes(u32()); }

void write_header(ByteWriter& out, std::span<const HeaderField> fields) {
  out.bytes(kFileMagic);
  out.u32(kFormatVersion);
  out.u32(static_cast<std::uint32_t>(fields.size()));
  for (const auto& field : fields) {
    out.str(field.key);
    out.str(field.value);
  }
}

std::vector<HeaderField> read_header(ByteReader& in) {
  if (in.remaining() < kFileMagic.size() || in.bytes(kFileMagic.size()) != kFileMagic) {
    throw FormatError("bad magic (not an SBLM file)");
  }
  const std::uint32_t version = in.u32();
  if (version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32();
  std::vector<HeaderField> fields;
  for (std::uint32_t i = 0; i < count; ++i) {
    HeaderField field;
    field.key = in.str();
    field.value = in.str();
    fields.push_back(std::move(field));
  }
  return fields;
}

const std::string& header_value(std::span<const HeaderField> fields, std::string_view key) {
  for (const auto& field : fields) {
    if (field.key == key) return field.value;
  }
  throw FormatError("missing header field '" + std::string(key) + "'");
}

}  // namespace senselm
