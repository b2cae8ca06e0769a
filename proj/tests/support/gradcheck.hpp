#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dare/head.hpp"
#include "dare/random.hpp"
#include "oracles.hpp"

namespace oracle {

struct GradCheckResult {
  double worst = 0;  // largest relative error seen
  std::size_t checked = 0;
  std::size_t skipped = 0;  // parameters whose perturbation flips a ReLU
};

inline std::vector<bool> relu_pattern(const dare::Head& head, const std::vector<dare::Scalar>& x) {
  std::vector<bool> out;
  std::vector<dare::Scalar> a = x;
  const auto& layers = head.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto& L = layers[l];
    std::vector<dare::Scalar> z(L.out_width);
    for (std::size_t r = 0; r < L.out_width; ++r) {
      dare::Scalar acc = 0;
      for (std::size_t c = 0; c < L.in_width; ++c) acc += L.weights[r * L.in_width + c] * a[c];
      z[r] = acc + L.biases[r];
      out.push_back(z[r] > 0);
      z[r] = std::max<dare::Scalar>(0.0, z[r]);
    }
    a = std::move(z);
  }
  return out;
}

// Central differences with step h over every weight and bias; dropout masks
// are taken from one training forward pass and then held fixed.
inline GradCheckResult gradient_check(dare::Head head, const std::vector<dare::Scalar>& x, std::size_t target,
                                      dare::Rng* dropout_rng, double h = 1e-5) {
  const dare::HeadTrace trace = dare::head_forward_train(head, x, dropout_rng);
  const dare::HeadGradients analytic = dare::head_backward(head, trace, target);
  GradCheckResult result;
  auto probe = [&](dare::Scalar& param, dare::Scalar grad) {
    const dare::Scalar saved = param;
    param = saved + h;
    const auto up_pattern = relu_pattern(head, x);
    const double up = head_loss(head, x, trace.masks, trace.mask_scale, target);
    param = saved - h;
    const auto down_pattern = relu_pattern(head, x);
    const double down = head_loss(head, x, trace.masks, trace.mask_scale, target);
    param = saved;
    if (up_pattern != down_pattern) {
      ++result.skipped;
      return;
    }
    const double numeric = (up - down) / (2 * h);
    const double rel = std::abs(grad - numeric) / std::max({std::abs(grad), std::abs(numeric), 1e-6});
    result.worst = std::max(result.worst, rel);
    ++result.checked;
  };
  auto& layers = head.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].weights.size(); ++i) probe(layers[l].weights[i], analytic.weights[l][i]);
    for (std::size_t i = 0; i < layers[l].biases.size(); ++i) probe(layers[l].biases[i], analytic.biases[l][i]);
  }
  return result;
}

// Random head with biases perturbed away from zero so ReLUs are exercised.
inline dare::Head random_head(dare::Rng& rng, std::size_t max_in = 32, std::size_t max_hidden = 64) {
  const std::size_t in = 1 + rng.below(max_in);
  const std::size_t out = 2 + rng.below(4);
  dare::HeadArchitecture arch;
  arch.hidden.clear();
  const std::size_t depth = rng.below(3);
  for (std::size_t d = 0; d < depth; ++d) arch.hidden.push_back(1 + rng.below(max_hidden));
  arch.dropout_rate = rng.below(2) ? 0.5 : 0.0;
  dare::Head head(in, out, arch, rng.next());
  for (auto& layer : head.layers())
    for (auto& b : layer.biases) b = rng.uniform(-0.3, 0.3);
  return head;
}

}  // namespace oracle
