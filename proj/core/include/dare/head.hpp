#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dare/layers.hpp"
#include "dare/random.hpp"

namespace dare {

/// Hidden-layer layout of a fully-connected classifier head. Every hidden
/// layer is Dense -> ReLU -> Dropout(rate); the output layer is Dense ->
/// softmax with one unit per branch.
struct HeadArchitecture {
  std::vector<std::size_t> hidden{4096, 4096};
  double dropout_rate = 0.5;
};

/// Fully-connected feed-forward classifier (one per tree node).
class Head {
 public:
  Head() = default;

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  Head(std::size_t input_width, std::size_t output_width, const HeadArchitecture& arch,
       std::uint64_t seed);

  /// Adopts explicit layers. Hidden layers must use ReLU, the last none.
  Head(std::vector<DenseSpec> layers, double dropout_rate);

  std::size_t input_width() const noexcept { return layers_.front().in_width; }
  std::size_t output_width() const noexcept { return layers_.back().out_width; }
  double dropout_rate() const noexcept { return dropout_rate_; }

  const std::vector<DenseSpec>& layers() const noexcept { return layers_; }
  std::vector<DenseSpec>& layers() noexcept { return layers_; }

  /// Inference pass (dropout is the identity). Throws LengthMismatch.
  Vector1 logits(std::span<const Scalar> input) const;
  Vector1 probabilities(std::span<const Scalar> input) const;

  /// Total trainable scalars.
  std::size_t parameter_count() const noexcept;

 private:
  std::vector<DenseSpec> layers_;
  double dropout_rate_ = 0.0;
};

/// Activations cached by a training forward pass.
struct HeadTrace {
  std::vector<Vector1> inputs;           // input seen by each dense layer
  std::vector<Vector1> pre_activations;  // W x + b of each dense layer
  std::vector<std::vector<std::uint8_t>> masks;  // dropout mask per hidden layer
  Scalar mask_scale = 1.0;                        // scale applied to kept units
  Vector1 probabilities;
};

/// Forward pass that records everything backprop needs. With a null rng,
/// dropout is skipped (all masks are ones, no scaling).
HeadTrace head_forward_train(const Head& head, std::span<const Scalar> input, Rng* rng);

/// Per-layer gradients, same shapes as the layer weights/biases.
struct HeadGradients {
  std::vector<Vector1> weights;
  std::vector<Vector1> biases;

  static HeadGradients zeros_like(const Head& head);
  void accumulate(const HeadGradients& other, Scalar scale = 1.0);
};

/// Exact gradients of -ln(p[true_class] + 1e-12) with respect to every
/// weight and bias, reusing the dropout masks recorded in `trace`.
HeadGradients head_backward(const Head& head, const HeadTrace& trace, std::size_t true_class);

/// Same as head_backward but adds the gradients into `into`, which must be
/// shaped like the head (see HeadGradients::zeros_like).
void head_backward_accumulate(const Head& head, const HeadTrace& trace, std::size_t true_class,
                              HeadGradients& into);

/// Per-head optimizer state: one velocity buffer per weight/bias array.
class MomentumState {
 public:
  explicit MomentumState(const Head& head);
  void step(Head& head, const HeadGradients& grads, double lr, double mu);

 private:
  HeadGradients velocity_;
};

}  // namespace dare
