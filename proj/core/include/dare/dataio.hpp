#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dare/tensor.hpp"

namespace dare {

// ---------------------------------------------------------------------------
// Label taxonomy
// ---------------------------------------------------------------------------

inline constexpr std::size_t kGestureCount = 16;
inline constexpr std::size_t kPoseCount = 3;
inline constexpr std::size_t kClassCount = 20;

/// Fixed class order: the 16 gestures, then the 3 poses, then "null".
/// Index 0 is "start", 16 "turning-horizontally", 19 "null".
const std::array<std::string_view, kClassCount>& taxonomy();

/// Index of a label name, or nullopt if it is not one of the 20.
std::optional<std::size_t> label_index(std::string_view name);

/// The first `count` taxonomy names (count <= 20).
std::vector<std::string> class_names(std::size_t count = kClassCount);

enum class LabelCategory { Gesture, Pose, Null };
LabelCategory category_of(std::size_t label);

// ---------------------------------------------------------------------------
// Feature datasets (Multi-FM rows with taxonomy labels)
// ---------------------------------------------------------------------------

struct FeatureDataset {
  std::size_t dim = 0;
  std::size_t class_count = 0;
  std::vector<Scalar> values;       // row-major, size() * dim
  std::vector<std::size_t> labels;  // taxonomy indices < class_count

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const Scalar> row(std::size_t i) const {
    return std::span<const Scalar>(values).subspan(i * dim, dim);
  }
  /// Throws LengthMismatch / LabelOutOfRange.
  void push_back(std::span<const Scalar> features, std::size_t label);
  FeatureDataset subset(std::span<const std::size_t> indices) const;
};

/// "DFMV" binary: magic, u16 version, u32 class count, u64 rows, u64 dim,
/// then per row a u32 label followed by dim little-endian f64 values.
void write_dfmv(const FeatureDataset& data, const std::filesystem::path& path);
FeatureDataset read_dfmv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

/// Decoded H x W x 3 image in [0, 1], same channel-minor layout as maps.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Scalar> data;

  Scalar operator()(std::size_t r, std::size_t c, std::size_t ch) const {
    return data[(r * width + c) * 3 + ch];
  }
  Scalar& operator()(std::size_t r, std::size_t c, std::size_t ch) {
    return data[(r * width + c) * 3 + ch];
  }
  friend bool operator==(const Image&, const Image&) = default;
};

/// Binary P6 (RGB) or P5 (gray, replicated to 3 channels), maxval <= 255,
/// scaled by 1/maxval. Throws UnsupportedFormat, CorruptHeader,
/// TruncatedPayload, IoError.
Image decode_image(const std::filesystem::path& path);
Image decode_image_bytes(std::span<const std::uint8_t> bytes);

/// Writes binary P6 with values rounded to 8 bits.
void encode_ppm(const Image& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm_bytes(const Image& image);

/// Bilinear resample to side x side with align-corners sampling:
/// source = target * (W_s - 1) / (W_t - 1), or the source center when the
/// target has a single pixel. Each axis is mapped independently.
FeatureMap3 resize_image(const Image& image, std::size_t side);

// ---------------------------------------------------------------------------
// Stereo manifests
// ---------------------------------------------------------------------------

struct StereoSample {
  std::filesystem::path left;
  std::filesystem::path right;
  std::size_t label = 0;
  std::string location;
};

/// CSV with header `left,right,label,location`; relative paths resolve
/// against the manifest's directory. Lines starting with '#' are comments,
/// except `#count,<label>,<n>` which declares an expected per-label tally.
struct Manifest {
  std::vector<StereoSample> samples;
  std::map<std::size_t, std::size_t> declared_counts;

  std::map<std::size_t, std::size_t> tallies() const;
  std::size_t image_count() const noexcept { return 2 * samples.size(); }
};

/// Throws ParseError(line), UnknownLabel(line), CountMismatch, and IoError
/// for missing images when check_files is set.
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir, bool check_files = false);
Manifest load_manifest(const std::filesystem::path& path, bool check_files = false);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Gaussian clusters around class centroids. Centroids are drawn in a cube
/// of side `margin` with rejection until every pair is at least `margin`
/// apart; samples add isotropic noise of standard deviation `noise`.
struct SynthFeatureSpec {
  std::size_t classes = kClassCount;
  std::size_t per_class = 50;
  std::size_t dim = 16;
  double margin = 4.0;
  double noise = 0.4;
  std::uint64_t seed = 7;
};

struct SynthFeatures {
  FeatureDataset data;
  std::vector<Vector1> centroids;
};

SynthFeatures synth_features(const SynthFeatureSpec& spec);

/// Stereo images whose class is drawn as a set of colored patches on a 4x4
/// grid; the right view is the left view shifted one column to the left
/// with wrap-around: right(r, c) = left(r, (c + 1) mod W).
struct SynthImageSpec {
  std::size_t classes = kClassCount;
  std::size_t per_class = 10;
  std::size_t side = 32;
  double noise = 0.05;
  std::uint64_t seed = 7;
};

struct StereoImage {
  Image left;
  Image right;
  std::size_t label = 0;
};

std::vector<StereoImage> synth_images(const SynthImageSpec& spec);

/// Writes PPM pairs under `dir/images/` plus `dir/manifest.csv`.
Manifest write_image_dataset(const std::vector<StereoImage>& pairs, const std::filesystem::path& dir);

}  // namespace dare
