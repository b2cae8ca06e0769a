#include "dare/weightfile.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dare/error.hpp"

namespace dare {
namespace {

static_assert(std::endian::native == std::endian::little,
              "weight files are written with native little-endian stores");

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const std::uint8_t* take(std::size_t n) {
    if (n > size_ - pos_) fail(ErrorCode::CorruptFile, "weight file truncated");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == size_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large files.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_weight_file(const WeightFile& file) {
  Writer w;
  w.put_bytes("DARE", 4);
  w.put<std::uint16_t>(WeightFile::kVersion);
  if (file.name.size() > 0xffff) fail(ErrorCode::InvalidConfig, "weight file name too long");
  w.put<std::uint16_t>(static_cast<std::uint16_t>(file.name.size()));
  w.put_bytes(file.name.data(), file.name.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(file.records.size()));
  for (const WeightRecord& rec : file.records) {
    std::size_t volume = rec.dims.empty() ? 0 : 1;
    for (auto d : rec.dims) volume *= d;
    if (rec.dims.empty() || rec.weights.size() != volume || rec.biases.size() != rec.dims[0]) {
      fail(ErrorCode::WeightMismatch, "record " + std::to_string(rec.layer_index) +
                                          " payload does not match its dims");
    }
    w.put<std::uint32_t>(rec.layer_index);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(rec.kind));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(rec.dims.size()));
    for (auto d : rec.dims) w.put<std::uint32_t>(d);
    w.put_bytes(rec.weights.data(), rec.weights.size() * sizeof(float));
    w.put_bytes(rec.biases.data(), rec.biases.size() * sizeof(float));
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc_of(bytes.data(), bytes.size());
  w.put<std::uint32_t>(crc);
  return std::move(bytes);
}

WeightFile decode_weight_file(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 2 + 2 + 4 + 4) fail(ErrorCode::CorruptFile, "weight file too short");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + body, 4);
  if (std::memcmp(bytes.data(), "DARE", 4) != 0) fail(ErrorCode::CorruptFile, "bad magic");
  if (crc_of(bytes.data(), body) != stored_crc) fail(ErrorCode::CorruptFile, "CRC mismatch");

  Reader r(bytes.data(), body);
  r.take(4);
  const auto version = r.get<std::uint16_t>();
  if (version != WeightFile::kVersion) {
    fail(ErrorCode::CorruptFile, "unsupported weight file version " + std::to_string(version));
  }
  WeightFile file;
  const auto name_len = r.get<std::uint16_t>();
  const auto* name = r.take(name_len);
  file.name.assign(reinterpret_cast<const char*>(name), name_len);
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    WeightRecord rec;
    rec.layer_index = r.get<std::uint32_t>();
    const auto kind = r.get<std::uint8_t>();
    if (kind != 1 && kind != 2) fail(ErrorCode::CorruptFile, "unknown record kind");
    rec.kind = static_cast<WeightRecord::Kind>(kind);
    const auto rank = r.get<std::uint8_t>();
    if (rank == 0) fail(ErrorCode::CorruptFile, "record without dims");
    std::size_t volume = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      rec.dims.push_back(r.get<std::uint32_t>());
      volume *= rec.dims.back();
      if (volume > body) fail(ErrorCode::CorruptFile, "record larger than file");
    }
    rec.weights.resize(volume);
    std::memcpy(rec.weights.data(), r.take(volume * sizeof(float)), volume * sizeof(float));
    rec.biases.resize(rec.dims[0]);
    std::memcpy(rec.biases.data(), r.take(rec.dims[0] * sizeof(float)), rec.dims[0] * sizeof(float));
    file.records.push_back(std::move(rec));
  }
  if (!r.done()) fail(ErrorCode::CorruptFile, "trailing bytes before CRC");
  return file;
}

void write_weight_file(const WeightFile& file, const std::filesystem::path& path) {
  const auto bytes = encode_weight_file(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

WeightFile read_weight_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weight_file(bytes);
}

}  // namespace dare
