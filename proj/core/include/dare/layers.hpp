#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dare/random.hpp"
#include "dare/tensor.hpp"

namespace dare {

// ---------------------------------------------------------------------------
// Feature-extraction layers (forward only; convolutional weights are frozen).
// ---------------------------------------------------------------------------

/// Geometry of a convolution layer: V x V filters, stride s, zero padding p.
struct ConvGeometry {
  std::size_t filter_size = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t out_channels = 1;

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

/// A convolution layer with its filter bank.
///
/// Filter k is a V x V x C_in block stored at weights[k * V*V*C_in ...] in
/// [x][y][c] order, so a filter row (fixed k and x) is contiguous in the same
/// channel-minor order as a padded input row.
struct ConvSpec {
  ConvGeometry geometry;
  std::size_t in_channels = 1;
  std::vector<Scalar> weights;
  std::vector<Scalar> biases;

  std::size_t filter_volume() const noexcept {
    return geometry.filter_size * geometry.filter_size * in_channels;
  }
  std::size_t weight_index(std::size_t k, std::size_t x, std::size_t y, std::size_t c) const noexcept {
    return ((k * geometry.filter_size + x) * geometry.filter_size + y) * in_channels + c;
  }
};

struct PoolSpec {
  std::size_t size = 2;
  std::size_t stride = 2;

  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

/// (N + 2p - V + s) / s. Throws InvalidGeometry when V > N + 2p or the
/// division is not exact.
std::size_t conv_output_side(std::size_t input_side, const ConvGeometry& geometry);

/// (N - Q + s) / s, with the same exactness rule.
std::size_t pool_output_side(std::size_t input_side, const PoolSpec& spec);

FeatureMap3 conv_forward(const FeatureMap3& input, const ConvSpec& spec);
FeatureMap3 relu_forward(const FeatureMap3& input);
FeatureMap3 maxpool_forward(const FeatureMap3& input, const PoolSpec& spec);

// ---------------------------------------------------------------------------
// Classifier-head layers.
// ---------------------------------------------------------------------------

enum class Activation { None, Relu };

/// Affine layer y = W x + b with W stored row-major (out x in).
struct DenseSpec {
  std::size_t in_width = 0;
  std::size_t out_width = 0;
  std::vector<Scalar> weights;
  std::vector<Scalar> biases;
  Activation activation = Activation::None;
};

Vector1 dense_forward(std::span<const Scalar> input, const DenseSpec& spec);

enum class DropoutMode { Training, Inference };

struct DropoutSpec {
  double rate = 0.5;
  DropoutMode mode = DropoutMode::Training;
  std::uint64_t seed = 0;
};

struct DropoutResult {
  Vector1 output;
  std::vector<std::uint8_t> mask;  // 1 = kept
};

/// Inverted dropout: survivors are scaled by 1 / (1 - rate); inference is
/// the identity. A rate of 1 in training zeroes everything.
DropoutResult dropout_apply(std::span<const Scalar> input, const DropoutSpec& spec);
DropoutResult dropout_apply(std::span<const Scalar> input, double rate, DropoutMode mode, Rng& rng);

/// Scale applied to kept units for a given rate (0 when rate == 1).
Scalar dropout_scale(double rate) noexcept;

/// Numerically stable softmax (max subtraction).
Vector1 softmax(std::span<const Scalar> logits);

inline constexpr Scalar kCrossEntropyFloor = 1e-12;

/// -ln(prob[true_class] + 1e-12).
Scalar cross_entropy(std::span<const Scalar> prob, std::size_t true_class);

/// Index of the largest element; ties go to the lowest index.
std::size_t argmax(std::span<const Scalar> values);

/// Classical momentum: v <- mu v - lr g; w <- w + v.
void sgd_momentum_step(std::span<Scalar> params, std::span<const Scalar> grads,
                       std::span<Scalar> velocity, double lr, double mu);

}  // namespace dare
