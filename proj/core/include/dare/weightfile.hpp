#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dare {

/// Binary weight container shared by backbones and classifier heads.
///
/// Layout (all integers little-endian):
///
///   "DARE"                     4-byte magic
///   u16 version                currently 1
///   u16 name length, bytes     owner name (backbone or node name)
///   u32 record count
///   per record:
///     u32 layer index
///     u8  kind                 1 = conv, 2 = dense
///     u8  rank, u32 dims[rank] conv: C_out, V, V, C_in; dense: out, in
///     f32 payload              prod(dims) weights, then dims[0] biases
///   u32 CRC-32 (zlib polynomial) of every preceding byte
struct WeightRecord {
  enum class Kind : std::uint8_t { Conv = 1, Dense = 2 };

  std::uint32_t layer_index = 0;
  Kind kind = Kind::Conv;
  std::vector<std::uint32_t> dims;
  std::vector<float> weights;
  std::vector<float> biases;
};

struct WeightFile {
  static constexpr std::uint16_t kVersion = 1;

  std::string name;
  std::vector<WeightRecord> records;
};

std::vector<std::uint8_t> encode_weight_file(const WeightFile& file);
/// Throws CorruptFile on a bad magic/version, truncation, or CRC failure.
WeightFile decode_weight_file(const std::vector<std::uint8_t>& bytes);

void write_weight_file(const WeightFile& file, const std::filesystem::path& path);
/// Throws IoError when the file cannot be read, otherwise as decode.
WeightFile read_weight_file(const std::filesystem::path& path);

}  // namespace dare
