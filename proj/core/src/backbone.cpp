#include "dare/backbone.hpp"

#include <cmath>
#include <string>

#include "dare/error.hpp"
#include "dare/random.hpp"
#include "dare/weightfile.hpp"
#include "json_util.hpp"

namespace dare {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t conv_count(const BackboneConfig& cfg) {
  std::size_t n = 0;
  for (const auto& layer : cfg.layers) n += std::holds_alternative<ConvGeometry>(layer);
  return n;
}

std::size_t positive(const json& obj, const char* key, const std::string& where) {
  const auto v = detail::require<long long>(obj, key, ErrorCode::InvalidConfig, where);
  if (v <= 0) fail(ErrorCode::InvalidConfig, where + ": '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

std::size_t non_negative(const json& obj, const char* key, const std::string& where) {
  const auto v = detail::require<long long>(obj, key, ErrorCode::InvalidConfig, where);
  if (v < 0) fail(ErrorCode::InvalidConfig, where + ": '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<ShapeStep> validate_config(const BackboneConfig& cfg) {
  if (cfg.input_size == 0 || cfg.input_channels == 0) {
    fail(ErrorCode::InvalidGeometry, "backbone '" + cfg.name + "' has an empty input");
  }
  std::vector<ShapeStep> trace{{cfg.input_size, cfg.input_channels}};
  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    const ShapeStep in = trace.back();
    try {
      trace.push_back(std::visit(
          overloaded{
              [&](const ConvGeometry& g) {
                if (g.out_channels == 0) fail(ErrorCode::InvalidGeometry, "conv with zero filters");
                return ShapeStep{conv_output_side(in.side, g), g.out_channels};
              },
              [&](const ReluLayer&) { return in; },
              [&](const PoolSpec& p) { return ShapeStep{pool_output_side(in.side, p), in.depth}; },
          },
          cfg.layers[l]));
    } catch (const Error& e) {
      fail(ErrorCode::InvalidGeometry, "layer " + std::to_string(l) + " of '" + cfg.name + "': " + e.what());
    }
  }
  return trace;
}

BackboneConfig parse_backbone_config(std::string_view json_text) {
  const json doc = detail::parse_json(json_text, ErrorCode::InvalidConfig, "backbone config");
  const std::string where = "backbone config";
  BackboneConfig cfg;
  cfg.name = detail::require<std::string>(doc, "name", ErrorCode::InvalidConfig, where);
  cfg.input_size = positive(doc, "input_size", where);
  cfg.input_channels = doc.contains("input_channels") ? positive(doc, "input_channels", where) : 3;
  if (doc.contains("head_hidden")) {
    for (const auto& w : doc.at("head_hidden")) {
      if (!w.is_number_integer() || w.get<long long>() <= 0) {
        fail(ErrorCode::InvalidConfig, where + ": head_hidden entries must be positive integers");
      }
      cfg.head_hidden.push_back(w.get<std::size_t>());
    }
  }
  const auto layers = detail::require<json>(doc, "layers", ErrorCode::InvalidConfig, where);
  if (!layers.is_array()) fail(ErrorCode::InvalidConfig, where + ": 'layers' must be an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const json& item = layers[i];
    const std::string at = where + " layer " + std::to_string(i);
    const auto kind = detail::require<std::string>(item, "kind", ErrorCode::InvalidConfig, at);
    if (kind == "conv") {
      cfg.layers.emplace_back(ConvGeometry{positive(item, "v", at), positive(item, "s", at),
                                           non_negative(item, "p", at), positive(item, "c_out", at)});
    } else if (kind == "relu") {
      cfg.layers.emplace_back(ReluLayer{});
    } else if (kind == "maxpool") {
      cfg.layers.emplace_back(PoolSpec{positive(item, "q", at), positive(item, "s", at)});
    } else {
      fail(ErrorCode::InvalidConfig, at + ": unknown kind '" + kind + "'");
    }
  }
  validate_config(cfg);
  return cfg;
}

BackboneConfig load_backbone_config(const std::filesystem::path& path) {
  return parse_backbone_config(detail::read_text_file(path));
}

std::string backbone_config_json(const BackboneConfig& cfg) {
  json layers = json::array();
  for (const auto& layer : cfg.layers) {
    layers.push_back(std::visit(
        overloaded{
            [](const ConvGeometry& g) {
              return json{{"kind", "conv"}, {"v", g.filter_size}, {"s", g.stride}, {"p", g.padding},
                          {"c_out", g.out_channels}};
            },
            [](const ReluLayer&) { return json{{"kind", "relu"}}; },
            [](const PoolSpec& p) { return json{{"kind", "maxpool"}, {"q", p.size}, {"s", p.stride}}; },
        },
        layer));
  }
  json doc{{"name", cfg.name},
           {"input_size", cfg.input_size},
           {"input_channels", cfg.input_channels},
           {"layers", layers}};
  if (!cfg.head_hidden.empty()) doc["head_hidden"] = cfg.head_hidden;
  return doc.dump(2) + "\n";
}

BackboneConfig builtin_backbone(std::string_view name) {
  if (name == "mininet") {
    return {"mininet",
            32,
            3,
            {ConvGeometry{3, 1, 1, 8}, ReluLayer{}, PoolSpec{2, 2}, ConvGeometry{3, 1, 1, 16},
             ReluLayer{}, PoolSpec{2, 2}},
            {64, 64}};
  }
  if (name == "alexconv") {
    return {"alexconv",
            227,
            3,
            {ConvGeometry{11, 4, 0, 96}, ReluLayer{}, PoolSpec{3, 2},
             ConvGeometry{5, 1, 2, 256}, ReluLayer{}, PoolSpec{3, 2},
             ConvGeometry{3, 1, 1, 384}, ReluLayer{},
             ConvGeometry{3, 1, 1, 384}, ReluLayer{},
             ConvGeometry{3, 1, 1, 256}, ReluLayer{}, PoolSpec{3, 2}},
            {4096, 4096}};
  }
  fail(ErrorCode::InvalidConfig, "no builtin backbone named '" + std::string(name) + "'");
}

void check_weights(const BackboneConfig& cfg, const BackboneWeights& weights) {
  if (weights.convs.size() != conv_count(cfg)) {
    fail(ErrorCode::WeightMismatch, "backbone '" + cfg.name + "' has " + std::to_string(conv_count(cfg)) +
                                        " conv layers, weights provide " +
                                        std::to_string(weights.convs.size()));
  }
  const auto trace = validate_config(cfg);
  std::size_t conv = 0;
  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    const auto* g = std::get_if<ConvGeometry>(&cfg.layers[l]);
    if (g == nullptr) continue;
    const ConvSpec& spec = weights.convs[conv++];
    if (!(spec.geometry == *g) || spec.in_channels != trace[l].depth ||
        spec.weights.size() != g->out_channels * spec.filter_volume() ||
        spec.biases.size() != g->out_channels) {
      fail(ErrorCode::WeightMismatch, "filter bank for layer " + std::to_string(l) + " of '" +
                                          cfg.name + "' does not fit");
    }
  }
}

BackboneWeights random_backbone_weights(const BackboneConfig& cfg, std::uint64_t seed) {
  const auto trace = validate_config(cfg);
  BackboneWeights weights;
  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    const auto* g = std::get_if<ConvGeometry>(&cfg.layers[l]);
    if (g == nullptr) continue;
    ConvSpec spec{*g, trace[l].depth, {}, std::vector<Scalar>(g->out_channels, 0.0)};
    spec.weights.resize(g->out_channels * spec.filter_volume());
    Rng rng(derive_seed(seed, l));
    const double limit = std::sqrt(6.0 / static_cast<double>(spec.filter_volume()));
    for (Scalar& w : spec.weights) w = rng.uniform(-limit, limit);
    weights.convs.push_back(std::move(spec));
  }
  return weights;
}

FeatureMap3 extract_channel(const FeatureMap3& image, const BackboneConfig& cfg,
                            const BackboneWeights& weights) {
  if (image.side() != cfg.input_size || image.depth() != cfg.input_channels) {
    fail(ErrorCode::ShapeMismatch, "backbone '" + cfg.name + "' expects " + std::to_string(cfg.input_size) +
                                       "x" + std::to_string(cfg.input_size) + "x" +
                                       std::to_string(cfg.input_channels) + " input");
  }
  check_weights(cfg, weights);
  FeatureMap3 current = image;
  std::size_t conv = 0;
  for (const auto& layer : cfg.layers) {
    current = std::visit(overloaded{
                             [&](const ConvGeometry&) { return conv_forward(current, weights.convs[conv++]); },
                             [&](const ReluLayer&) { return relu_forward(current); },
                             [&](const PoolSpec& p) { return maxpool_forward(current, p); },
                         },
                         layer);
  }
  return current;
}

std::size_t multifm_length(const BackboneConfig& cfg) {
  const ShapeStep last = validate_config(cfg).back();
  return 2 * last.side * last.side * last.depth;
}

MultiFM fuse_stereo(const FeatureMap3& left, const FeatureMap3& right, const BackboneConfig& cfg,
                    const BackboneWeights& weights) {
  const FeatureMap3 left_features = extract_channel(left, cfg, weights);
  const FeatureMap3 right_features = extract_channel(right, cfg, weights);
  MultiFM fused;
  fused.channel_length = left_features.size();
  fused.values.reserve(2 * fused.channel_length);
  const auto l = left_features.data();
  const auto r = right_features.data();
  fused.values.insert(fused.values.end(), l.begin(), l.end());
  fused.values.insert(fused.values.end(), r.begin(), r.end());
  return fused;
}

void save_weights(const BackboneConfig& cfg, const BackboneWeights& weights,
                  const std::filesystem::path& path) {
  check_weights(cfg, weights);
  WeightFile file;
  file.name = cfg.name;
  std::size_t conv = 0;
  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    if (!std::holds_alternative<ConvGeometry>(cfg.layers[l])) continue;
    const ConvSpec& spec = weights.convs[conv++];
    WeightRecord rec;
    rec.layer_index = static_cast<std::uint32_t>(l);
    rec.kind = WeightRecord::Kind::Conv;
    const auto v = static_cast<std::uint32_t>(spec.geometry.filter_size);
    rec.dims = {static_cast<std::uint32_t>(spec.geometry.out_channels), v, v,
                static_cast<std::uint32_t>(spec.in_channels)};
    rec.weights.assign(spec.weights.begin(), spec.weights.end());
    rec.biases.assign(spec.biases.begin(), spec.biases.end());
    file.records.push_back(std::move(rec));
  }
  write_weight_file(file, path);
}

BackboneWeights load_weights(const BackboneConfig& cfg, const std::filesystem::path& path) {
  const WeightFile file = read_weight_file(path);
  const auto trace = validate_config(cfg);
  BackboneWeights weights;
  std::size_t next = 0;
  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    const auto* g = std::get_if<ConvGeometry>(&cfg.layers[l]);
    if (g == nullptr) continue;
    if (next >= file.records.size()) {
      fail(ErrorCode::WeightMismatch, path.string() + " has too few records for '" + cfg.name + "'");
    }
    const WeightRecord& rec = file.records[next++];
    const std::vector<std::uint32_t> expected{static_cast<std::uint32_t>(g->out_channels),
                                              static_cast<std::uint32_t>(g->filter_size),
                                              static_cast<std::uint32_t>(g->filter_size),
                                              static_cast<std::uint32_t>(trace[l].depth)};
    if (rec.kind != WeightRecord::Kind::Conv || rec.layer_index != l || rec.dims != expected) {
      fail(ErrorCode::WeightMismatch, path.string() + " record for layer " + std::to_string(l) +
                                          " does not match '" + cfg.name + "'");
    }
    weights.convs.push_back(ConvSpec{*g, trace[l].depth, Vector1(rec.weights.begin(), rec.weights.end()),
                                     Vector1(rec.biases.begin(), rec.biases.end())});
  }
  if (next != file.records.size()) {
    fail(ErrorCode::WeightMismatch, path.string() + " has extra records for '" + cfg.name + "'");
  }
  return weights;
}

}  // namespace dare
