#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace dare {

using Scalar = double;

/// Flat 1-D feature vector (a flattened map, a Multi-FM, a layer activation).
using Vector1 = std::vector<Scalar>;

/// Canonical offset of element [i][j][c] in an N x N x C map: row-major over
/// (i, j) with the channel index varying fastest.
constexpr std::size_t index_of(std::size_t i, std::size_t j, std::size_t c, std::size_t side,
                               std::size_t depth) noexcept {
  assert(i < side && j < side && c < depth);
  return (i * side + j) * depth + c;
}

/// Square N x N x C stack of feature maps stored in canonical order.
class FeatureMap3 {
 public:
  FeatureMap3() = default;
  FeatureMap3(std::size_t side, std::size_t depth, Scalar fill = 0.0);
  /// Throws ShapeMismatch unless data.size() == side * side * depth.
  FeatureMap3(std::size_t side, std::size_t depth, std::vector<Scalar> data);

  std::size_t side() const noexcept { return side_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return data_.size(); }

  Scalar operator()(std::size_t i, std::size_t j, std::size_t c) const noexcept {
    return data_[index_of(i, j, c, side_, depth_)];
  }
  Scalar& operator()(std::size_t i, std::size_t j, std::size_t c) noexcept {
    return data_[index_of(i, j, c, side_, depth_)];
  }

  std::span<const Scalar> data() const noexcept { return data_; }
  std::span<Scalar> data() noexcept { return data_; }

  /// Copy of the elements in canonical order.
  Vector1 flatten() const { return data_; }

  /// Inverse of flatten(); throws ShapeMismatch on a length mismatch.
  static FeatureMap3 from_vector(std::span<const Scalar> values, std::size_t side,
                                 std::size_t depth);

  /// True when every element is finite.
  bool all_finite() const noexcept;

  friend bool operator==(const FeatureMap3&, const FeatureMap3&) = default;

 private:
  std::size_t side_ = 0;
  std::size_t depth_ = 0;
  std::vector<Scalar> data_;
};

/// Surrounds every channel with `padding` rows/columns of zeros.
FeatureMap3 zero_pad(const FeatureMap3& map, std::size_t padding);

}  // namespace dare
