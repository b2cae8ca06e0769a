#include "features.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include "dare/error.hpp"

namespace dare::tools {

namespace fs = std::filesystem;

Extractor make_extractor(const std::string& spec, const fs::path& weights_path, std::uint64_t seed) {
  Extractor ex;
  ex.config = fs::exists(spec) ? load_backbone_config(spec) : builtin_backbone(spec);
  ex.weights = weights_path.empty() ? random_backbone_weights(ex.config, derive_seed(seed, 0xbb))
                                    : load_weights(ex.config, weights_path);
  // Round through f32 so the in-memory model equals the archived one.
  for (auto& conv : ex.weights.convs) {
    for (auto& w : conv.weights) w = static_cast<float>(w);
    for (auto& b : conv.biases) b = static_cast<float>(b);
  }
  return ex;
}

bool archive_has_backbone(const fs::path& archive) { return fs::exists(archive / "backbone.json"); }

Extractor load_extractor(const fs::path& archive) {
  Extractor ex;
  ex.config = load_backbone_config(archive / "backbone.json");
  ex.weights = load_weights(ex.config, archive / "backbone.dare");
  return ex;
}

void save_extractor(const Extractor& ex, const fs::path& archive) {
  fs::create_directories(archive);
  std::ofstream(archive / "backbone.json") << backbone_config_json(ex.config);
  save_weights(ex.config, ex.weights, archive / "backbone.dare");
}

FeatureMap3 load_view(const fs::path& path, std::size_t side) { return resize_image(decode_image(path), side); }

MultiFM pair_features(const fs::path& left, const fs::path& right, const Extractor& ex) {
  return fuse_stereo(load_view(left, ex.config.input_size), load_view(right, ex.config.input_size), ex.config,
                     ex.weights);
}

FeatureDataset extract_dataset(const Manifest& manifest, const Extractor& ex, std::size_t jobs) {
  const std::size_t n = manifest.samples.size();
  std::vector<Vector1> rows(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        rows[i] = pair_features(manifest.samples[i].left, manifest.samples[i].right, ex).values;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::max<std::size_t>(1, jobs); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  FeatureDataset data{multifm_length(ex.config), kClassCount, {}, {}};
  data.values.reserve(n * data.dim);
  for (std::size_t i = 0; i < n; ++i) data.push_back(rows[i], manifest.samples[i].label);
  return data;
}

}  // namespace dare::tools
