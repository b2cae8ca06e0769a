#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "dare/dataio.hpp"
#include "dare/error.hpp"

namespace dare {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number(const char* what) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1u << 24)) fail(ErrorCode::CorruptHeader, std::string(what) + " is implausibly large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) fail(ErrorCode::CorruptHeader, std::string("expected ") + what);
    return value;
  }

  /// Exactly one whitespace byte separates the header from the raster.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail(ErrorCode::CorruptHeader, "missing separator before pixel data");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Image decode_image_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) fail(ErrorCode::CorruptHeader, "file too short for a PNM header");
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    fail(ErrorCode::UnsupportedFormat, "only binary P5/P6 images are supported");
  }
  const bool rgb = bytes[1] == '6';
  HeaderReader header(bytes);
  const std::size_t width = header.number("width");
  const std::size_t height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (width == 0 || height == 0) fail(ErrorCode::CorruptHeader, "zero image dimension");
  if (maxval == 0) fail(ErrorCode::CorruptHeader, "maxval must be positive");
  if (maxval > 255) fail(ErrorCode::UnsupportedFormat, "only 8-bit images are supported");
  const std::size_t offset = header.payload_offset();

  const std::size_t channels = rgb ? 3 : 1;
  const std::size_t needed = width * height * channels;
  if (bytes.size() - std::min(offset, bytes.size()) < needed) {
    fail(ErrorCode::TruncatedPayload, "expected " + std::to_string(needed) + " samples, found " +
                                          std::to_string(bytes.size() - std::min(offset, bytes.size())));
  }
  Image img{height, width, std::vector<Scalar>(height * width * 3)};
  const double scale = static_cast<double>(maxval);
  for (std::size_t p = 0; p < width * height; ++p) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const std::uint8_t raw = bytes[offset + p * channels + (rgb ? ch : 0)];
      img.data[p * 3 + ch] = std::min(1.0, static_cast<double>(raw) / scale);
    }
  }
  return img;
}

Image decode_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open image " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_image_bytes(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_ppm_bytes(const Image& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.data.size());
  for (Scalar v : image.data) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

void encode_ppm(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_ppm_bytes(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

Tap source_tap(std::size_t target, std::size_t target_len, std::size_t source_len) {
  const double pos = target_len > 1
                         ? static_cast<double>(target * (source_len - 1)) / static_cast<double>(target_len - 1)
                         : static_cast<double>(source_len - 1) / 2.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  return {lo, std::min(lo + 1, source_len - 1), pos - static_cast<double>(lo)};
}

}  // namespace

FeatureMap3 resize_image(const Image& image, std::size_t side) {
  if (side == 0) fail(ErrorCode::ContractViolation, "resize target must be at least 1");
  if (image.height == 0 || image.width == 0) fail(ErrorCode::ContractViolation, "resize of an empty image");
  FeatureMap3 out(side, 3);
  for (std::size_t i = 0; i < side; ++i) {
    const Tap row = source_tap(i, side, image.height);
    for (std::size_t j = 0; j < side; ++j) {
      const Tap col = source_tap(j, side, image.width);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const Scalar a = image(row.lo, col.lo, ch);
        const Scalar b = image(row.lo, col.hi, ch);
        const Scalar c = image(row.hi, col.lo, ch);
        const Scalar d = image(row.hi, col.hi, ch);
        const Scalar top = a + col.frac * (b - a);
        const Scalar bottom = c + col.frac * (d - c);
        out(i, j, ch) = std::clamp(top + row.frac * (bottom - top), 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace dare
