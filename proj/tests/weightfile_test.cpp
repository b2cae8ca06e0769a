#include <gtest/gtest.h>

#include <filesystem>

#include "dare/error.hpp"
#include "dare/weightfile.hpp"

using namespace dare;

namespace {

std::uint32_t reference_crc(const std::uint8_t* p, std::size_t n) {
  std::uint32_t crc = 0xffffffffu;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= p[i];
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xedb88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

WeightFile sample_file() {
  WeightFile f;
  f.name = "GNet35";
  WeightRecord conv;
  conv.layer_index = 0;
  conv.kind = WeightRecord::Kind::Conv;
  conv.dims = {2, 1, 1, 3};
  conv.weights = {0.5f, -1.25f, 3.0f, 1e-3f, 7.0f, -0.0f};
  conv.biases = {0.25f, -0.5f};
  WeightRecord dense;
  dense.layer_index = 1;
  dense.kind = WeightRecord::Kind::Dense;
  dense.dims = {2, 2};
  dense.weights = {1, 2, 3, 4};
  dense.biases = {5, 6};
  f.records = {conv, dense};
  return f;
}

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_weight_file(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ContractViolation;
}

}  // namespace

TEST(WeightFile, RoundTrip) {
  const WeightFile f = sample_file();
  const auto bytes = encode_weight_file(f);
  const WeightFile g = decode_weight_file(bytes);
  EXPECT_EQ(g.name, f.name);
  ASSERT_EQ(g.records.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(g.records[r].layer_index, f.records[r].layer_index);
    EXPECT_EQ(g.records[r].kind, f.records[r].kind);
    EXPECT_EQ(g.records[r].dims, f.records[r].dims);
    EXPECT_EQ(g.records[r].weights, f.records[r].weights);
    EXPECT_EQ(g.records[r].biases, f.records[r].biases);
  }
  EXPECT_EQ(encode_weight_file(g), bytes);
}

TEST(WeightFile, HeaderAndTrailerLayout) {
  const auto bytes = encode_weight_file(sample_file());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DARE");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t stored = bytes[body] | bytes[body + 1] << 8 | bytes[body + 2] << 16 |
                               static_cast<std::uint32_t>(bytes[body + 3]) << 24;
  EXPECT_EQ(stored, reference_crc(bytes.data(), body));
}

TEST(WeightFile, DetectsCorruption) {
  auto bytes = encode_weight_file(sample_file());
  auto flipped = bytes;
  flipped[20] ^= 0x40;
  EXPECT_EQ(decode_error(flipped), ErrorCode::CorruptFile);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(decode_error(magic), ErrorCode::CorruptFile);
  EXPECT_EQ(decode_error(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)), ErrorCode::CorruptFile);
  EXPECT_EQ(decode_error(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1)), ErrorCode::CorruptFile);
}

TEST(WeightFile, RejectsPayloadSizeMismatchOnEncode) {
  WeightFile f = sample_file();
  f.records[1].weights.pop_back();
  EXPECT_THROW(encode_weight_file(f), Error);
}

TEST(WeightFile, FileIo) {
  const auto path = std::filesystem::temp_directory_path() / "dare_weightfile_test.dare";
  write_weight_file(sample_file(), path);
  EXPECT_EQ(read_weight_file(path).records.size(), 2u);
  std::filesystem::remove(path);
  try {
    read_weight_file(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}
