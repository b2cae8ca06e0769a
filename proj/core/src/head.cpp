#include "dare/head.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dare/error.hpp"

namespace dare {

Head::Head(std::size_t input_width, std::size_t output_width, const HeadArchitecture& arch,
           std::uint64_t seed)
    : dropout_rate_(arch.dropout_rate) {
  if (input_width == 0 || output_width == 0) {
    fail(ErrorCode::InvalidConfig, "head widths must be positive");
  }
  if (!(arch.dropout_rate >= 0.0 && arch.dropout_rate <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "dropout rate must lie in [0, 1]");
  }
  Rng rng(seed);
  std::size_t fan_in = input_width;
  auto add_layer = [&](std::size_t fan_out, Activation act) {
    DenseSpec layer;
    layer.in_width = fan_in;
    layer.out_width = fan_out;
    layer.activation = act;
    layer.weights.resize(fan_in * fan_out);
    layer.biases.assign(fan_out, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Scalar& w : layer.weights) w = rng.uniform(-limit, limit);
    layers_.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (std::size_t width : arch.hidden) {
    if (width == 0) fail(ErrorCode::InvalidConfig, "hidden layer of width 0");
    add_layer(width, Activation::Relu);
  }
  add_layer(output_width, Activation::None);
}

Head::Head(std::vector<DenseSpec> layers, double dropout_rate)
    : layers_(std::move(layers)), dropout_rate_(dropout_rate) {
  if (layers_.empty()) fail(ErrorCode::InvalidConfig, "head without layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseSpec& layer = layers_[l];
    if (layer.weights.size() != layer.in_width * layer.out_width ||
        layer.biases.size() != layer.out_width) {
      fail(ErrorCode::WeightMismatch, "head layer " + std::to_string(l) + " has inconsistent shapes");
    }
    if (l > 0 && layer.in_width != layers_[l - 1].out_width) {
      fail(ErrorCode::WeightMismatch, "head layer " + std::to_string(l) + " does not chain");
    }
    const bool last = l + 1 == layers_.size();
    if ((layer.activation == Activation::None) != last) {
      fail(ErrorCode::InvalidConfig, "hidden layers use ReLU and the output layer none");
    }
  }
}

Vector1 Head::logits(std::span<const Scalar> input) const {
  if (input.size() != input_width()) {
    fail(ErrorCode::LengthMismatch, "head expects " + std::to_string(input_width()) +
                                        " features, got " + std::to_string(input.size()));
  }
  Vector1 activation(input.begin(), input.end());
  for (const DenseSpec& layer : layers_) activation = dense_forward(activation, layer);
  return activation;
}

Vector1 Head::probabilities(std::span<const Scalar> input) const { return softmax(logits(input)); }

std::size_t Head::parameter_count() const noexcept {
  std::size_t total = 0;
  for (const DenseSpec& layer : layers_) total += layer.weights.size() + layer.biases.size();
  return total;
}

namespace {

Vector1 affine(std::span<const Scalar> input, const DenseSpec& layer) {
  Vector1 out(layer.out_width);
  for (std::size_t r = 0; r < layer.out_width; ++r) {
    const Scalar* w = layer.weights.data() + r * layer.in_width;
    Scalar acc = 0.0;
    for (std::size_t c = 0; c < layer.in_width; ++c) acc += w[c] * input[c];
    out[r] = acc + layer.biases[r];
  }
  return out;
}

}  // namespace

HeadTrace head_forward_train(const Head& head, std::span<const Scalar> input, Rng* rng) {
  if (input.size() != head.input_width()) {
    fail(ErrorCode::LengthMismatch, "head expects " + std::to_string(head.input_width()) +
                                        " features, got " + std::to_string(input.size()));
  }
  const auto& layers = head.layers();
  HeadTrace trace;
  if (rng != nullptr) trace.mask_scale = dropout_scale(head.dropout_rate());
  trace.inputs.reserve(layers.size());
  trace.pre_activations.reserve(layers.size());
  trace.inputs.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Vector1 pre = affine(trace.inputs.back(), layers[l]);
    if (l + 1 == layers.size()) {
      trace.probabilities = softmax(pre);
      trace.pre_activations.push_back(std::move(pre));
      break;
    }
    Vector1 hidden = pre;
    for (Scalar& v : hidden) v = std::max<Scalar>(0.0, v);
    trace.pre_activations.push_back(std::move(pre));
    if (rng != nullptr) {
      DropoutResult dropped = dropout_apply(hidden, head.dropout_rate(), DropoutMode::Training, *rng);
      trace.masks.push_back(std::move(dropped.mask));
      trace.inputs.push_back(std::move(dropped.output));
    } else {
      trace.masks.emplace_back(hidden.size(), 1);
      trace.inputs.push_back(std::move(hidden));
    }
  }
  return trace;
}

HeadGradients HeadGradients::zeros_like(const Head& head) {
  HeadGradients g;
  for (const DenseSpec& layer : head.layers()) {
    g.weights.emplace_back(layer.weights.size(), 0.0);
    g.biases.emplace_back(layer.biases.size(), 0.0);
  }
  return g;
}

void HeadGradients::accumulate(const HeadGradients& other, Scalar scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += scale * other.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += scale * other.biases[l][i];
  }
}

HeadGradients head_backward(const Head& head, const HeadTrace& trace, std::size_t true_class) {
  HeadGradients grads = HeadGradients::zeros_like(head);
  head_backward_accumulate(head, trace, true_class, grads);
  return grads;
}

void head_backward_accumulate(const Head& head, const HeadTrace& trace, std::size_t true_class,
                              HeadGradients& into) {
  const auto& layers = head.layers();
  if (trace.pre_activations.size() != layers.size() || trace.inputs.size() != layers.size() ||
      trace.masks.size() + 1 != layers.size() || trace.probabilities.size() != head.output_width()) {
    fail(ErrorCode::ContractViolation, "head_backward needs a completed training forward pass");
  }
  if (true_class >= head.output_width()) {
    fail(ErrorCode::ContractViolation, "true class outside the head's outputs");
  }
  if (into.weights.size() != layers.size() || into.biases.size() != layers.size()) {
    fail(ErrorCode::ShapeMismatch, "gradient buffer is not shaped like the head");
  }
  const Vector1& prob = trace.probabilities;
  // d/dz of -ln(p_t + eps) = p_t / (p_t + eps) * (p - onehot(t)).
  const Scalar factor = prob[true_class] / (prob[true_class] + kCrossEntropyFloor);
  Vector1 delta(prob.size());
  for (std::size_t j = 0; j < prob.size(); ++j) {
    delta[j] = factor * (prob[j] - (j == true_class ? 1.0 : 0.0));
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseSpec& layer = layers[l];
    const Vector1& in = trace.inputs[l];
    Scalar* gw = into.weights[l].data();
    for (std::size_t r = 0; r < layer.out_width; ++r) {
      const Scalar d = delta[r];
      if (d == 0.0) continue;
      Scalar* row = gw + r * layer.in_width;
      for (std::size_t c = 0; c < layer.in_width; ++c) row[c] += d * in[c];
    }
    for (std::size_t r = 0; r < layer.out_width; ++r) into.biases[l][r] += delta[r];
    if (l == 0) break;

    Vector1 upstream(layer.in_width, 0.0);
    for (std::size_t r = 0; r < layer.out_width; ++r) {
      const Scalar d = delta[r];
      if (d == 0.0) continue;
      const Scalar* row = layer.weights.data() + r * layer.in_width;
      for (std::size_t c = 0; c < layer.in_width; ++c) upstream[c] += row[c] * d;
    }
    // Back through dropout, then the ReLU of the previous hidden layer.
    const Vector1& pre = trace.pre_activations[l - 1];
    const auto& mask = trace.masks[l - 1];
    for (std::size_t c = 0; c < upstream.size(); ++c) {
      const Scalar g = mask[c] ? upstream[c] * trace.mask_scale : 0.0;
      upstream[c] = pre[c] > 0.0 ? g : 0.0;
    }
    delta = std::move(upstream);
  }
}

MomentumState::MomentumState(const Head& head) : velocity_(HeadGradients::zeros_like(head)) {}

void MomentumState::step(Head& head, const HeadGradients& grads, double lr, double mu) {
  auto& layers = head.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    sgd_momentum_step(layers[l].weights, grads.weights[l], velocity_.weights[l], lr, mu);
    sgd_momentum_step(layers[l].biases, grads.biases[l], velocity_.biases[l], lr, mu);
  }
}

}  // namespace dare
