#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dare/dataio.hpp"
#include "dare/error.hpp"

namespace dare {

static_assert(std::endian::native == std::endian::little, "DFMV files use native little-endian stores");

const std::array<std::string_view, kClassCount>& taxonomy() {
  static constexpr std::array<std::string_view, kClassCount> names{
      "start", "up",    "end",      "here",  "take-photo",       "four",
      "carry", "tessellation", "two", "down", "one",              "backward",
      "three", "five",  "number-delimiter", "boat",
      "turning-horizontally", "turning-vertically", "free-swim",
      "null"};
  return names;
}

std::optional<std::size_t> label_index(std::string_view name) {
  const auto& names = taxonomy();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> class_names(std::size_t count) {
  if (count > kClassCount) fail(ErrorCode::LabelOutOfRange, "at most 20 classes are defined");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(taxonomy()[i]);
  return out;
}

LabelCategory category_of(std::size_t label) {
  if (label < kGestureCount) return LabelCategory::Gesture;
  if (label < kGestureCount + kPoseCount) return LabelCategory::Pose;
  if (label < kClassCount) return LabelCategory::Null;
  fail(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
}

void FeatureDataset::push_back(std::span<const Scalar> features, std::size_t label) {
  if (features.size() != dim) {
    fail(ErrorCode::LengthMismatch, "row has " + std::to_string(features.size()) + " values, dataset dim is " +
                                        std::to_string(dim));
  }
  if (label >= class_count) {
    fail(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) + " >= " + std::to_string(class_count));
  }
  values.insert(values.end(), features.begin(), features.end());
  labels.push_back(label);
}

FeatureDataset FeatureDataset::subset(std::span<const std::size_t> indices) const {
  FeatureDataset out{dim, class_count, {}, {}};
  out.values.reserve(indices.size() * dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(row(i), labels.at(i));
  return out;
}

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) fail(ErrorCode::CorruptFile, path + " truncated");
  return value;
}

}  // namespace

void write_dfmv(const FeatureDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write("DFMV", 4);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.class_count));
  put<std::uint64_t>(out, data.size());
  put<std::uint64_t>(out, data.dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(data.labels[i]));
    const auto row = data.row(i);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size_bytes()));
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

FeatureDataset read_dfmv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  const std::string name = path.string();
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "DFMV", 4) != 0) {
    fail(ErrorCode::CorruptFile, name + " is not a DFMV file");
  }
  if (get<std::uint16_t>(in, name) != 1) fail(ErrorCode::CorruptFile, name + " has an unknown version");
  FeatureDataset data;
  data.class_count = get<std::uint32_t>(in, name);
  const auto rows = get<std::uint64_t>(in, name);
  data.dim = get<std::uint64_t>(in, name);
  if (data.class_count == 0 || data.class_count > kClassCount) {
    fail(ErrorCode::CorruptFile, name + " declares " + std::to_string(data.class_count) + " classes");
  }
  Vector1 row(data.dim);
  for (std::uint64_t r = 0; r < rows; ++r) {
    const auto label = get<std::uint32_t>(in, name);
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(Scalar)))) {
      fail(ErrorCode::CorruptFile, name + " truncated at row " + std::to_string(r));
    }
    data.push_back(row, label);
  }
  if (in.peek() != std::char_traits<char>::eof()) fail(ErrorCode::CorruptFile, name + " has trailing bytes");
  return data;
}

}  // namespace dare
