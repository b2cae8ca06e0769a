#include "dare/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dare/error.hpp"

namespace dare {
namespace {

std::string geometry_text(std::size_t n, std::size_t window, std::size_t stride, std::size_t pad) {
  return "N=" + std::to_string(n) + " window=" + std::to_string(window) +
         " stride=" + std::to_string(stride) + " pad=" + std::to_string(pad);
}

std::size_t output_side(std::size_t input_side, std::size_t window, std::size_t stride,
                        std::size_t padding) {
  if (window == 0 || stride == 0) {
    fail(ErrorCode::InvalidGeometry,
         "window and stride must be positive (" + geometry_text(input_side, window, stride, padding) + ")");
  }
  const std::size_t span = input_side + 2 * padding;
  if (window > span) {
    fail(ErrorCode::InvalidGeometry,
         "window larger than padded input (" + geometry_text(input_side, window, stride, padding) + ")");
  }
  const std::size_t numerator = span - window + stride;
  if (numerator % stride != 0) {
    fail(ErrorCode::InvalidGeometry,
         "stride does not divide the sweep (" + geometry_text(input_side, window, stride, padding) + ")");
  }
  return numerator / stride;
}

}  // namespace

std::size_t conv_output_side(std::size_t input_side, const ConvGeometry& geometry) {
  return output_side(input_side, geometry.filter_size, geometry.stride, geometry.padding);
}

std::size_t pool_output_side(std::size_t input_side, const PoolSpec& spec) {
  return output_side(input_side, spec.size, spec.stride, 0);
}

FeatureMap3 conv_forward(const FeatureMap3& input, const ConvSpec& spec) {
  const ConvGeometry& g = spec.geometry;
  if (input.depth() != spec.in_channels) {
    fail(ErrorCode::ShapeMismatch, "conv expects depth " + std::to_string(spec.in_channels) +
                                       ", input has " + std::to_string(input.depth()));
  }
  if (g.out_channels == 0) fail(ErrorCode::InvalidGeometry, "conv with zero filters");
  if (spec.weights.size() != g.out_channels * spec.filter_volume() ||
      spec.biases.size() != g.out_channels) {
    fail(ErrorCode::WeightMismatch, "conv filter bank does not match its geometry");
  }
  const std::size_t out_side = conv_output_side(input.side(), g);
  const FeatureMap3 padded = zero_pad(input, g.padding);
  const std::size_t padded_side = padded.side();
  const std::size_t depth = spec.in_channels;
  const std::size_t row_len = g.filter_size * depth;  // one filter row: all (y, c)
  const auto src = padded.data();
  const Scalar* weights = spec.weights.data();

  FeatureMap3 out(out_side, g.out_channels);
  auto dst = out.data();
  for (std::size_t i = 0; i < out_side; ++i) {
    for (std::size_t j = 0; j < out_side; ++j) {
      Scalar* cell = &dst[index_of(i, j, 0, out_side, g.out_channels)];
      for (std::size_t k = 0; k < g.out_channels; ++k) {
        // Accumulation order is bias, then x, y, c: identical to the
        // triple sum written out element by element.
        Scalar acc = spec.biases[k];
        for (std::size_t x = 0; x < g.filter_size; ++x) {
          const Scalar* in_row = &src[index_of(g.stride * i + x, g.stride * j, 0, padded_side, depth)];
          const Scalar* w_row = weights + spec.weight_index(k, x, 0, 0);
          for (std::size_t t = 0; t < row_len; ++t) acc += in_row[t] * w_row[t];
        }
        cell[k] = acc;
      }
    }
  }
  return out;
}

FeatureMap3 relu_forward(const FeatureMap3& input) {
  FeatureMap3 out = input;
  for (Scalar& v : out.data()) v = std::max<Scalar>(0.0, v);
  return out;
}

FeatureMap3 maxpool_forward(const FeatureMap3& input, const PoolSpec& spec) {
  const std::size_t out_side = pool_output_side(input.side(), spec);
  const std::size_t depth = input.depth();
  FeatureMap3 out(out_side, depth);
  for (std::size_t i = 0; i < out_side; ++i) {
    for (std::size_t j = 0; j < out_side; ++j) {
      for (std::size_t k = 0; k < depth; ++k) {
        Scalar best = input(spec.stride * i, spec.stride * j, k);
        for (std::size_t x = 0; x < spec.size; ++x) {
          for (std::size_t y = 0; y < spec.size; ++y) {
            best = std::max(best, input(spec.stride * i + x, spec.stride * j + y, k));
          }
        }
        out(i, j, k) = best;
      }
    }
  }
  return out;
}

Vector1 dense_forward(std::span<const Scalar> input, const DenseSpec& spec) {
  if (input.size() != spec.in_width) {
    fail(ErrorCode::ShapeMismatch, "dense layer expects " + std::to_string(spec.in_width) +
                                       " inputs, got " + std::to_string(input.size()));
  }
  if (spec.weights.size() != spec.in_width * spec.out_width || spec.biases.size() != spec.out_width) {
    fail(ErrorCode::WeightMismatch, "dense weights do not match declared widths");
  }
  Vector1 out(spec.out_width);
  for (std::size_t r = 0; r < spec.out_width; ++r) {
    const Scalar* w = spec.weights.data() + r * spec.in_width;
    Scalar acc = 0.0;
    for (std::size_t c = 0; c < spec.in_width; ++c) acc += w[c] * input[c];
    acc += spec.biases[r];
    out[r] = spec.activation == Activation::Relu ? std::max<Scalar>(0.0, acc) : acc;
  }
  return out;
}

Scalar dropout_scale(double rate) noexcept { return rate < 1.0 ? 1.0 / (1.0 - rate) : 0.0; }

DropoutResult dropout_apply(std::span<const Scalar> input, const DropoutSpec& spec) {
  Rng rng(spec.seed);
  return dropout_apply(input, spec.rate, spec.mode, rng);
}

DropoutResult dropout_apply(std::span<const Scalar> input, double rate, DropoutMode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    fail(ErrorCode::ContractViolation, "dropout rate must lie in [0, 1]");
  }
  DropoutResult result{Vector1(input.begin(), input.end()), std::vector<std::uint8_t>(input.size(), 1)};
  if (mode == DropoutMode::Inference || rate == 0.0) return result;
  const Scalar scale = dropout_scale(rate);
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (rng.uniform() < rate) {
      result.mask[i] = 0;
      result.output[i] = 0.0;
    } else {
      result.output[i] *= scale;
    }
  }
  return result;
}

Vector1 softmax(std::span<const Scalar> logits) {
  if (logits.empty()) fail(ErrorCode::ContractViolation, "softmax of an empty vector");
  const Scalar peak = *std::max_element(logits.begin(), logits.end());
  Vector1 out(logits.size());
  Scalar total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (Scalar& v : out) v /= total;
  return out;
}

Scalar cross_entropy(std::span<const Scalar> prob, std::size_t true_class) {
  if (true_class >= prob.size()) {
    fail(ErrorCode::ContractViolation, "true class " + std::to_string(true_class) +
                                           " outside a " + std::to_string(prob.size()) + "-way output");
  }
  return -std::log(prob[true_class] + kCrossEntropyFloor);
}

std::size_t argmax(std::span<const Scalar> values) {
  if (values.empty()) fail(ErrorCode::ContractViolation, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void sgd_momentum_step(std::span<Scalar> params, std::span<const Scalar> grads,
                       std::span<Scalar> velocity, double lr, double mu) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    fail(ErrorCode::ShapeMismatch, "parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = mu * velocity[i] - lr * grads[i];
    params[i] += velocity[i];
  }
}

}  // namespace dare
