#include "senselm/checkpoint.hpp"

#include "senselm/binio.hpp"
#include "senselm/errors.hpp"

namespace senselm {

namespace {

std::vector<HeaderField> header_fields(const CheckpointHeader& h) {
  return {
      {"kind", "checkpoint"},
      {"software_version", h.software_version},
      {"precision", std::string(to_string(h.precision))},
      {"mode", std::string(to_string(h.mode))},
      {"step", std::to_string(h.step)},
      {"seed", std::to_string(h.seed)},
      {"rng_algorithm", h.rng_algorithm},
      {"rng_counter", std::to_string(h.rng_counter)},
      {"train_config_digest", std::to_string(h.train_config_digest)},
      {"vocab_hash", std::to_string(h.vocab_hash)},
      {"membership_hash", std::to_string(h.membership_hash)},
      {"model.hidden", std::to_string(h.model.hidden)},
      {"model.layers", std::to_string(h.model.layers)},
      {"model.heads", std::to_string(h.model.heads)},
      {"model.ff_dim", std::to_string(h.model.ff_dim)},
      {"model.max_positions", std::to_string(h.model.max_positions)},
      {"model.vocab_size", std::to_string(h.model.vocab_size)},
      {"model.sense_count", std::to_string(h.model.sense_count)},
  };
}

std::uint64_t as_uint(std::span<const HeaderField> fields, std::string_view key) {
  const std::string& value = header_value(fields, key);
  try {
    std::size_t used = 0;
    const auto out = std::stoull(value, &used);
    if (used != value.size()) throw FormatError("");
    return out;
  } catch (const std::exception&) {
    throw FormatError("header field '" + std::string(key) + "' is not an integer");
  }
}

CheckpointHeader parse_header(std::span<const HeaderField> fields) {
  if (header_value(fields, "kind") != "checkpoint") throw FormatError("file is not a checkpoint");
  CheckpointHeader h;
  h.software_version = header_value(fields, "software_version");
  try {
    h.precision = parse_precision(header_value(fields, "precision"));
    h.mode = parse_oov_mode(header_value(fields, "mode"));
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  h.step = as_uint(fields, "step");
  h.seed = as_uint(fields, "seed");
  h.rng_algorithm = header_value(fields, "rng_algorithm");
  h.rng_counter = as_uint(fields, "rng_counter");
  h.train_config_digest = as_uint(fields, "train_config_digest");
  h.vocab_hash = as_uint(fields, "vocab_hash");
  h.membership_hash = as_uint(fields, "membership_hash");
  h.model.hidden = as_uint(fields, "model.hidden");
  h.model.layers = as_uint(fields, "model.layers");
  h.model.heads = as_uint(fields, "model.heads");
  h.model.ff_dim = as_uint(fields, "model.ff_dim");
  h.model.max_positions = as_uint(fields, "model.max_positions");
  h.model.vocab_size = as_uint(fields, "model.vocab_size");
  h.model.sense_count = as_uint(fields, "model.sense_count");
  try {
    h.model.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint model config: ") + e.what());
  }
  return h;
}

template <typename Real>
void write_tensors(ByteWriter& out, const ModelParams<Real>& params, std::string_view prefix) {
  for (const auto& t : params.tensors()) {
    out.str(std::string(prefix) + t.name);
    out.u32(static_cast<std::uint32_t>(t.rows));
    out.u32(static_cast<std::uint32_t>(t.cols));
    // Column-major storage, row-major on disk.
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t c = 0; c < t.cols; ++c) {
        const Real v = t.data[c * t.rows + r];
        if constexpr (sizeof(Real) == 4) {
          out.f32(v);
        } else {
          out.f64(v);
        }
      }
    }
  }
}

template <typename Real>
void read_tensors(ByteReader& in, ModelParams<Real>& params, std::string_view prefix) {
  for (auto& t : params.tensors()) {
    const std::string name = in.str();
    if (name != std::string(prefix) + t.name) {
      throw FormatError("expected tensor '" + std::string(prefix) + t.name + "', found '" + name + "'");
    }
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (rows != t.rows || cols != t.cols) throw FormatError("tensor '" + name + "' has the wrong shape");
    if (in.remaining() / sizeof(Real) < t.size()) throw FormatError("checkpoint truncated in tensor '" + name + "'");
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t c = 0; c < t.cols; ++c) {
        if constexpr (sizeof(Real) == 4) {
          t.data[c * t.rows + r] = in.f32();
        } else {
          t.data[c * t.rows + r] = in.f64();
        }
      }
    }
  }
}

}  // namespace

std::string_view to_string(Precision precision) { return precision == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view text) {
  if (text == "32" || text == "f32") return Precision::f32;
  if (text == "64" || text == "f64") return Precision::f64;
  throw ConfigError("unknown precision '" + std::string(text) + "' (expected 32 or 64)");
}

template <typename Real>
void save_checkpoint(const Checkpoint<Real>& checkpoint, const std::filesystem::path& path) {
  if (checkpoint.header.precision != precision_of<Real>()) {
    throw ContractError("checkpoint header precision disagrees with its tensors");
  }
  ByteWriter out;
  write_header(out, header_fields(checkpoint.header));
  out.u32(static_cast<std::uint32_t>(3 * checkpoint.params.tensors().size()));
  write_tensors(out, checkpoint.params, "");
  write_tensors(out, checkpoint.adam_first, "adam_m.");
  write_tensors(out, checkpoint.adam_second, "adam_v.");
  out.write_file(path);
}

template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path) {
  auto in = ByteReader::from_file(path);
  Checkpoint<Real> ckpt;
  ckpt.header = parse_header(read_header(in));
  if (ckpt.header.precision != precision_of<Real>()) {
    throw FormatError("checkpoint precision is " + std::string(to_string(ckpt.header.precision)) + ", expected " +
                      std::string(to_string(precision_of<Real>())));
  }
  ckpt.params = ModelParams<Real>::zeros(ckpt.header.model);
  ckpt.adam_first = ModelParams<Real>::zeros(ckpt.header.model);
  ckpt.adam_second = ModelParams<Real>::zeros(ckpt.header.model);
  const std::uint32_t count = in.u32();
  if (count != 3 * ckpt.params.tensors().size()) throw FormatError("unexpected tensor count");
  read_tensors(in, ckpt.params, "");
  read_tensors(in, ckpt.adam_first, "adam_m.");
  read_tensors(in, ckpt.adam_second, "adam_v.");
  if (!in.at_end()) throw FormatError("trailing bytes after checkpoint payload");
  return ckpt;
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  auto in = ByteReader::from_file(path);
  return parse_header(read_header(in));
}

void check_artifacts(const CheckpointHeader& header, std::uint64_t vocab_hash, std::uint64_t membership_hash,
                     bool allow_mismatch) {
  if (allow_mismatch) return;
  if (header.vocab_hash != vocab_hash) throw CompatError("vocabulary differs from the one the checkpoint was trained with");
  if (header.membership_hash != membership_hash) {
    throw CompatError("membership matrix differs from the one the checkpoint was trained with");
  }
}

template void save_checkpoint<float>(const Checkpoint<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const Checkpoint<double>&, const std::filesystem::path&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace senselm
