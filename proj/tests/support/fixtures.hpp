#pragma once

#include <string>
#include <vector>

#include "dare/dataio.hpp"
#include "dare/metrics.hpp"
#include "dare/treeclf.hpp"
#include "oracles.hpp"

namespace fixture {

inline dare::TreeTopology dare20() { return dare::load_topology(oracle::config_path("topologies/dare20.json")); }

inline dare::HeadArchitecture reduced_head() { return dare::HeadArchitecture{{64, 64}, 0.5}; }

// Default optimizer settings with an explicit seed.
inline dare::TrainConfig desk_config(std::uint64_t seed) {
  dare::TrainConfig cfg;
  cfg.learning_rate = 0.001;
  cfg.momentum = 0.9;
  cfg.batch_size = 32;
  cfg.epochs = 50;
  cfg.seed = seed;
  return cfg;
}

// Head whose output is fixed by its biases (zero weights).
inline dare::Head constant_head(std::size_t in, std::vector<double> biases) {
  dare::DenseSpec out{in, biases.size(), std::vector<double>(in * biases.size(), 0.0), biases,
                      dare::Activation::None};
  return dare::Head({out}, 0.0);
}

// Mean of each 5-epoch block is no larger than the block before it.
inline bool block_means_non_increasing(const std::vector<double>& loss, std::size_t window = 5) {
  for (std::size_t e = 0; e + 2 * window <= loss.size(); ++e) {
    double before = 0, after = 0;
    for (std::size_t k = 0; k < window; ++k) {
      before += loss[e + k];
      after += loss[e + window + k];
    }
    if (after > before) return false;
  }
  return true;
}

}  // namespace fixture
