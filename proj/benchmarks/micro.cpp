#include <benchmark/benchmark.h>

#include <map>

#include "dare/backbone.hpp"
#include "dare/dataio.hpp"
#include "dare/head.hpp"
#include "dare/layers.hpp"
#include "dare/metrics.hpp"
#include "dare/random.hpp"
#include "dare/treeclf.hpp"

using namespace dare;

namespace {

FeatureMap3 noise_map(std::size_t side, std::size_t depth, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMap3 m(side, depth);
  for (Scalar& v : m.data()) v = rng.uniform();
  return m;
}

Vector1 noise_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Vector1 v(n);
  for (Scalar& x : v) x = rng.uniform(-1, 1);
  return v;
}

void BM_Conv(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const FeatureMap3 z = noise_map(side, 3, 1);
  ConvSpec spec{{3, 1, 1, 8}, 3, {}, {}};
  spec.weights = noise_vector(8 * spec.filter_volume(), 2);
  spec.biases.assign(8, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(z, spec));
}
BENCHMARK(BM_Conv)->Arg(16)->Arg(32)->Arg(64);

void BM_StereoExtract(benchmark::State& state) {
  const BackboneConfig cfg = builtin_backbone("mininet");
  const BackboneWeights w = random_backbone_weights(cfg, 3);
  const FeatureMap3 left = noise_map(cfg.input_size, 3, 4), right = noise_map(cfg.input_size, 3, 5);
  for (auto _ : state) benchmark::DoNotOptimize(fuse_stereo(left, right, cfg, w));
}
BENCHMARK(BM_StereoExtract);

void BM_HeadTrainStep(benchmark::State& state) {
  Head head(512, 5, HeadArchitecture{{64, 64}, 0.5}, 6);
  const Vector1 x = noise_vector(512, 7);
  Rng rng(8);
  auto grads = HeadGradients::zeros_like(head);
  for (auto _ : state) {
    const HeadTrace trace = head_forward_train(head, x, &rng);
    head_backward_accumulate(head, trace, 2, grads);
  }
}
BENCHMARK(BM_HeadTrainStep);

void BM_TreePredict(benchmark::State& state) {
  const TreeTopology topo = load_topology(std::string(DARE_CONFIG_DIR) + "/topologies/dare20.json");
  std::map<NodeId, Head> heads;
  for (const auto& n : topo.nodes()) heads.emplace(n.id, Head(512, n.arity(), HeadArchitecture{{64, 64}, 0.5}, n.id));
  const TreeClassifier tree(topo, class_names(), std::move(heads));
  const Vector1 x = noise_vector(512, 9);
  for (auto _ : state) benchmark::DoNotOptimize(tree.predict(x));
}
BENCHMARK(BM_TreePredict);

void BM_MetricsReport(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(10);
  std::vector<std::size_t> truth(n), pred(n);
  for (std::size_t k = 0; k < n; ++k) {
    truth[k] = rng.below(20);
    pred[k] = rng.below(4) ? truth[k] : rng.below(20);
  }
  for (auto _ : state) benchmark::DoNotOptimize(report(tally(truth, pred, 20)));
}
BENCHMARK(BM_MetricsReport)->Arg(1000)->Arg(58274);

}  // namespace

BENCHMARK_MAIN();
