#include <algorithm>
#include <string>

#include "dare/error.hpp"
#include "dare/metrics.hpp"
#include "dare/random.hpp"

namespace dare {

CrossValidation cross_validate(const FeatureDataset& data, std::size_t k, std::uint64_t seed, const TrainFn& train) {
  const auto folds = kfold_split(data.size(), k, seed);
  CrossValidation cv;
  cv.aggregate_matrix = ConfusionMatrix(data.class_count);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    FoldResult result;
    result.indices = folds[f];
    std::sort(result.indices.begin(), result.indices.end());
    ConfusionMatrix cm(data.class_count);
    try {
      const Classifier clf = train(data.subset(train_idx), f);
      for (std::size_t i : result.indices) {
        const std::size_t p = clf(data.row(i));
        result.predictions.push_back(p);
        cm.add(data.labels[i], p);
        cv.aggregate_matrix.add(data.labels[i], p);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "fold " + std::to_string(f) + ": " + e.what());
    }
    result.report = report(cm);
    cv.folds.push_back(std::move(result));
  }
  cv.aggregate = report(cv.aggregate_matrix);
  return cv;
}

CrossValidation cross_validate(const FeatureDataset& data, const TreeTopology& topology,
                               std::span<const std::string> names, const HeadArchitecture& arch,
                               const TrainConfig& cfg, std::size_t k) {
  return cross_validate(data, k, cfg.seed, [&](const FeatureDataset& train, std::size_t fold) -> Classifier {
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, fold);
    auto tree = std::make_shared<TreeClassifier>(train_tree(topology, train, names, arch, fold_cfg).classifier);
    return [tree](std::span<const Scalar> x) { return tree->classify(x); };
  });
}

}  // namespace dare
