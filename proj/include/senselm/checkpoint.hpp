#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "senselm/model.hpp"
#include "senselm/objective.hpp"

namespace senselm {

enum class Precision : std::uint8_t { f32, f64 };

std::string_view to_string(Precision precision);
Precision parse_precision(std::string_view text);  // "32" | "64" | "f32" | "f64"

template <typename Real>
constexpr Precision precision_of() {
  return sizeof(Real) == 4 ? Precision::f32 : Precision::f64;
}

struct CheckpointHeader {
  ModelConfig model;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::uint64_t train_config_digest = 0;
  std::uint64_t vocab_hash = 0;
  std::uint64_t membership_hash = 0;
  Precision precision = Precision::f32;
  OovMode mode = OovMode::sixty_k_no_oov;
  std::string rng_algorithm;
  std::uint64_t rng_counter = 0;
  std::string software_version;
  friend bool operator==(const CheckpointHeader&, const CheckpointHeader&) = default;
};

template <typename Real>
struct Checkpoint {
  CheckpointHeader header;
  ModelParams<Real> params;
  ModelParams<Real> adam_first;
  ModelParams<Real> adam_second;
};

/// Layout: "SBLM", u32 version, header key/value strings, u32 tensor count,
/// then per tensor (name, u32 rows, u32 cols, row-major little-endian values
/// of the checkpoint's precision): parameters, then Adam first and second
/// moments, each in ModelParams::tensors() order.
template <typename Real>
void save_checkpoint(const Checkpoint<Real>& checkpoint, const std::filesystem::path& path);

/// Throws FormatError on a bad magic, version, truncation, or a precision
/// other than Real's.
template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path);

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

/// CompatError unless the header's artifact hashes match, or `allow_mismatch`.
void check_artifacts(const CheckpointHeader& header, std::uint64_t vocab_hash, std::uint64_t membership_hash,
                     bool allow_mismatch = false);

}  // namespace senselm
