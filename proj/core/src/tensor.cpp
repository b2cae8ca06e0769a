#include "dare/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dare/error.hpp"

namespace dare {

FeatureMap3::FeatureMap3(std::size_t side, std::size_t depth, Scalar fill)
    : side_(side), depth_(depth), data_(side * side * depth, fill) {}

FeatureMap3::FeatureMap3(std::size_t side, std::size_t depth, std::vector<Scalar> data)
    : side_(side), depth_(depth), data_(std::move(data)) {
  if (data_.size() != side_ * side_ * depth_) {
    fail(ErrorCode::ShapeMismatch, "map of " + std::to_string(side_) + "x" +
                                       std::to_string(side_) + "x" + std::to_string(depth_) +
                                       " given " + std::to_string(data_.size()) + " values");
  }
}

FeatureMap3 FeatureMap3::from_vector(std::span<const Scalar> values, std::size_t side,
                                     std::size_t depth) {
  return FeatureMap3(side, depth, std::vector<Scalar>(values.begin(), values.end()));
}

bool FeatureMap3::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
}

FeatureMap3 zero_pad(const FeatureMap3& map, std::size_t padding) {
  if (padding == 0) return map;
  const std::size_t side = map.side();
  const std::size_t depth = map.depth();
  const std::size_t padded_side = side + 2 * padding;
  FeatureMap3 out(padded_side, depth, 0.0);
  const auto src = map.data();
  auto dst = out.data();
  const std::size_t row = side * depth;
  for (std::size_t i = 0; i < side; ++i) {
    const auto from = src.begin() + static_cast<std::ptrdiff_t>(i * row);
    const std::size_t to = index_of(i + padding, padding, 0, padded_side, depth);
    std::copy(from, from + static_cast<std::ptrdiff_t>(row), dst.begin() + static_cast<std::ptrdiff_t>(to));
  }
  return out;
}

}  // namespace dare
