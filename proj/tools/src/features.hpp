#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dare/backbone.hpp"
#include "dare/dataio.hpp"

namespace dare::tools {

struct Extractor {
  BackboneConfig config;
  BackboneWeights weights;
};

/// `spec` is a config file or a builtin name. Weights come from
/// `weights_path` when given, else from a seeded random init.
Extractor make_extractor(const std::string& spec, const std::filesystem::path& weights_path, std::uint64_t seed);
Extractor load_extractor(const std::filesystem::path& archive);
void save_extractor(const Extractor& ex, const std::filesystem::path& archive);
bool archive_has_backbone(const std::filesystem::path& archive);

FeatureMap3 load_view(const std::filesystem::path& path, std::size_t side);
MultiFM pair_features(const std::filesystem::path& left, const std::filesystem::path& right, const Extractor& ex);

/// Multi-FM rows for every manifest pair; rows are computed on `jobs`
/// threads and stored by sample index.
FeatureDataset extract_dataset(const Manifest& manifest, const Extractor& ex, std::size_t jobs);

}  // namespace dare::tools
