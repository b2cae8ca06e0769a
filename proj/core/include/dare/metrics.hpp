#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dare/dataio.hpp"
#include "dare/treeclf.hpp"

namespace dare {

/// n x n counts, rows are true classes and columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n);

  std::size_t classes() const noexcept { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  void add(std::size_t truth, std::size_t predicted);
  std::uint64_t total() const noexcept { return total_; }

  std::uint64_t tp(std::size_t i) const;
  std::uint64_t fn(std::size_t i) const;
  std::uint64_t fp(std::size_t i) const;
  std::uint64_t tn(std::size_t i) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Throws LengthMismatch, LabelOutOfRange.
ConfusionMatrix tally(std::span<const std::size_t> truth, std::span<const std::size_t> predicted, std::size_t n);

struct ClassMetrics {
  double precision = 0, recall = 0, f1 = 0, tpr = 0, tnr = 0, bacc = 0;
};

struct MetricsReport {
  std::size_t n = 0;
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0;
  double ccr_percent = 0;
};

/// Rates with a zero denominator are 0. Throws EmptyMatrix.
MetricsReport report(const ConfusionMatrix& cm);

struct BoxStats {
  double min = 0, p25 = 0, median = 0, p75 = 0, max = 0;
};

/// Quantile q at position q*(n-1) of the sorted values, interpolated
/// linearly. Throws EmptyList.
double quantile(std::vector<double> values, double q);
BoxStats box_stats(std::span<const double> values);

/// Seeded shuffle of 0..count-1 cut into k folds; the first count % k
/// folds get one extra element. Throws InvalidK.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t count, std::size_t k, std::uint64_t seed);

using Classifier = std::function<std::size_t(std::span<const Scalar>)>;
/// Builds a classifier from the training part of a fold.
using TrainFn = std::function<Classifier(const FeatureDataset& train, std::size_t fold)>;

struct FoldResult {
  std::vector<std::size_t> indices;  // held-out samples
  std::vector<std::size_t> predictions;
  MetricsReport report;
};

struct CrossValidation {
  std::vector<FoldResult> folds;
  ConfusionMatrix aggregate_matrix{1};
  MetricsReport aggregate;
};

/// Folds run in order; errors are rethrown with the fold index.
CrossValidation cross_validate(const FeatureDataset& data, std::size_t k, std::uint64_t seed, const TrainFn& train);

/// Trains `topology` on each fold with seed derive_seed(cfg.seed, fold).
CrossValidation cross_validate(const FeatureDataset& data, const TreeTopology& topology,
                               std::span<const std::string> names, const HeadArchitecture& arch,
                               const TrainConfig& cfg, std::size_t k);

/// class,precision,recall,f1,tpr,tnr,bacc rows plus a summary row.
void write_metrics_csv(std::ostream& out, const MetricsReport& r, std::span<const std::string> names);
/// metric,min,p25,median,p75,max for bacc and f1.
void write_box_csv(std::ostream& out, const MetricsReport& r);

}  // namespace dare
