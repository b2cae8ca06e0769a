#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dare/layers.hpp"
#include "dare/tensor.hpp"

namespace dare {

struct ReluLayer {
  friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};

/// One stage of a sequential backbone.
using LayerSpec = std::variant<ConvGeometry, ReluLayer, PoolSpec>;

/// Declarative conv/ReLU/pool stack applied identically to both stereo views.
struct BackboneConfig {
  std::string name;
  std::size_t input_size = 0;
  std::size_t input_channels = 3;
  std::vector<LayerSpec> layers;
  /// Hidden widths of the classifier heads paired with this backbone.
  std::vector<std::size_t> head_hidden;
};

struct ShapeStep {
  std::size_t side = 0;
  std::size_t depth = 0;
  friend bool operator==(const ShapeStep&, const ShapeStep&) = default;
};

/// Shape after the input and after every layer. Throws InvalidGeometry
/// naming the first layer whose geometry does not fit.
std::vector<ShapeStep> validate_config(const BackboneConfig& cfg);

/// Parses the JSON backbone description:
///   {name, input_size, input_channels, head_hidden?,
///    layers: [{kind:"conv", v, s, p, c_out} | {kind:"relu"} | {kind:"maxpool", q, s}]}
/// Throws InvalidConfig (and InvalidGeometry via validation).
BackboneConfig parse_backbone_config(std::string_view json_text);
BackboneConfig load_backbone_config(const std::filesystem::path& path);
std::string backbone_config_json(const BackboneConfig& cfg);

/// Shipped configurations: "mininet" (32 px, two conv/ReLU/pool stages) and
/// "alexconv" (227 px, AlexNet-shaped five-conv stack).
BackboneConfig builtin_backbone(std::string_view name);

/// Filter banks for the conv layers of a config, in layer order.
struct BackboneWeights {
  std::vector<ConvSpec> convs;
};

/// Throws WeightMismatch unless every conv layer has a matching bank.
void check_weights(const BackboneConfig& cfg, const BackboneWeights& weights);

/// He-uniform filters (+-sqrt(6 / fan_in)), zero biases.
BackboneWeights random_backbone_weights(const BackboneConfig& cfg, std::uint64_t seed);

/// Runs one view through the stack.
FeatureMap3 extract_channel(const FeatureMap3& image, const BackboneConfig& cfg,
                            const BackboneWeights& weights);

/// Concatenation of the flattened left and right feature maps.
struct MultiFM {
  Vector1 values;
  std::size_t channel_length = 0;

  std::span<const Scalar> left() const { return std::span(values).first(channel_length); }
  std::span<const Scalar> right() const { return std::span(values).subspan(channel_length); }
};

/// 2 * N_L^2 * C_L for the config's final shape.
std::size_t multifm_length(const BackboneConfig& cfg);

MultiFM fuse_stereo(const FeatureMap3& left, const FeatureMap3& right, const BackboneConfig& cfg,
                    const BackboneWeights& weights);

/// Weights are stored as f32; see weightfile.hpp for the layout.
void save_weights(const BackboneConfig& cfg, const BackboneWeights& weights,
                  const std::filesystem::path& path);
BackboneWeights load_weights(const BackboneConfig& cfg, const std::filesystem::path& path);

}  // namespace dare
