#include "dare/treeclf.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <set>
#include <string>
#include <thread>

#include "dare/error.hpp"
#include "dare/weightfile.hpp"
#include "json_util.hpp"

namespace dare {

using nlohmann::json;

namespace {

std::string describe(const TreeNode& n) { return n.name + " (id " + std::to_string(n.id) + ")"; }

/// Runs task(i) for i in [0, count) on up to `jobs` threads. Exceptions are
/// rethrown for the lowest failing index so errors are deterministic.
template <typename Task>
void run_indexed(std::size_t count, std::size_t jobs, Task&& task) {
  std::vector<std::exception_ptr> errors(count);
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::size_t NodeDataset::populated_branches() const {
  return static_cast<std::size_t>(
      std::count_if(branch_counts.begin(), branch_counts.end(), [](std::size_t c) { return c > 0; }));
}

NodeDataset node_dataset(const FeatureDataset& data, const TreeTopology& topology, NodeId node,
                         std::span<const std::string> names) {
  const TreeNode& n = topology.node(node);
  std::map<std::string, std::size_t> branch_of;
  for (std::size_t b = 0; b < n.groups.size(); ++b) {
    for (const auto& label : n.groups[b]) branch_of[label] = b;
  }
  NodeDataset out;
  out.node = node;
  out.arity = n.arity();
  out.branch_counts.assign(n.arity(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t label = data.labels[i];
    if (label >= names.size()) {
      fail(ErrorCode::LabelOutOfRange, "sample " + std::to_string(i) + " has label " + std::to_string(label));
    }
    const auto it = branch_of.find(names[label]);
    if (it == branch_of.end()) continue;
    out.sample_indices.push_back(i);
    out.branch_labels.push_back(it->second);
    ++out.branch_counts[it->second];
  }
  return out;
}

std::uint64_t node_seed(std::uint64_t base, NodeId node) noexcept {
  return derive_seed(base, static_cast<std::uint64_t>(static_cast<std::int64_t>(node)) + 0x5eed);
}

TrainedNode train_node(const NodeDataset& subset, const FeatureDataset& data, const HeadArchitecture& arch,
                       const TrainConfig& cfg, std::uint64_t seed) {
  if (!(cfg.learning_rate >= 0.0)) fail(ErrorCode::InvalidConfig, "learning rate must be non-negative");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) fail(ErrorCode::InvalidConfig, "momentum must lie in [0, 1)");
  if (cfg.batch_size == 0) fail(ErrorCode::InvalidConfig, "batch size must be at least 1");
  if (subset.populated_branches() < 2) {
    fail(ErrorCode::DegenerateNode, "node " + std::to_string(subset.node) + " has samples in " +
                                        std::to_string(subset.populated_branches()) + " branch(es)");
  }

  TrainedNode result{Head(data.dim, subset.arity, arch, derive_seed(seed, 0)), {}};
  Head& head = result.head;
  MomentumState optimizer(head);
  Rng rng(derive_seed(seed, 1));
  HeadGradients grads = HeadGradients::zeros_like(head);

  std::vector<std::size_t> order(subset.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (auto& w : grads.weights) std::fill(w.begin(), w.end(), 0.0);
      for (auto& b : grads.biases) std::fill(b.begin(), b.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t pos = order[k];
        const HeadTrace trace = head_forward_train(head, data.row(subset.sample_indices[pos]), &rng);
        const std::size_t target = subset.branch_labels[pos];
        loss_sum += cross_entropy(trace.probabilities, target);
        head_backward_accumulate(head, trace, target, grads);
      }
      const Scalar inv = 1.0 / static_cast<Scalar>(stop - start);
      for (auto& w : grads.weights) for (Scalar& v : w) v *= inv;
      for (auto& b : grads.biases) for (Scalar& v : b) v *= inv;
      optimizer.step(head, grads, cfg.learning_rate, cfg.momentum);
    }
    result.loss_history.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return result;
}

TreeClassifier::TreeClassifier(TreeTopology topology, std::vector<std::string> names,
                               std::map<NodeId, Head> heads)
    : topology_(std::move(topology)), names_(std::move(names)), heads_(std::move(heads)) {
  const std::set<std::string> known(names_.begin(), names_.end());
  for (const auto& leaf : topology_.leaves()) {
    if (!known.count(leaf)) fail(ErrorCode::UncoveredLabel, "leaf '" + leaf + "' is not a known class");
  }
  std::optional<std::size_t> width;
  for (const TreeNode& n : topology_.nodes()) {
    const auto it = heads_.find(n.id);
    if (it == heads_.end()) fail(ErrorCode::InvalidTopology, describe(n) + " has no trained head");
    if (it->second.output_width() != n.arity()) {
      fail(ErrorCode::ArityMismatch, describe(n) + " head has " + std::to_string(it->second.output_width()) +
                                         " outputs for " + std::to_string(n.arity()) + " branches");
    }
    if (width && *width != it->second.input_width()) {
      fail(ErrorCode::LengthMismatch, describe(n) + " head input width differs from other nodes");
    }
    width = it->second.input_width();
  }
}

std::size_t TreeClassifier::input_width() const { return heads_.at(topology_.root()).input_width(); }

Prediction TreeClassifier::predict(std::span<const Scalar> features) const {
  Prediction p;
  NodeId current = topology_.root();
  while (true) {
    const TreeNode& n = topology_.node(current);
    Vector1 prob = heads_.at(current).probabilities(features);
    const std::size_t branch = argmax(prob);
    p.path.push_back(current);
    p.node_probabilities.push_back(std::move(prob));
    const Branch& b = n.branches[branch];
    if (b.is_leaf()) {
      p.label_name = b.leaf;
      p.label = static_cast<std::size_t>(std::find(names_.begin(), names_.end(), b.leaf) - names_.begin());
      return p;
    }
    current = *b.child;
  }
}

TrainedTree train_tree(const TreeTopology& topology, const FeatureDataset& data,
                       std::span<const std::string> names, const HeadArchitecture& arch,
                       const TrainConfig& cfg) {
  const auto leaves = topology.leaves();
  const std::set<std::string> leaf_set(leaves.begin(), leaves.end());
  std::set<std::size_t> present(data.labels.begin(), data.labels.end());
  for (std::size_t label : present) {
    if (label >= names.size() || !leaf_set.count(names[label])) {
      const std::string name = label < names.size() ? names[label] : std::to_string(label);
      fail(ErrorCode::UncoveredLabel, "dataset label '" + name + "' has no leaf in the topology");
    }
  }

  const std::vector<NodeId> order = topology.breadth_first();
  std::vector<std::optional<TrainedNode>> trained(order.size());
  run_indexed(order.size(), cfg.jobs, [&](std::size_t i) {
    const TreeNode& n = topology.node(order[i]);
    const NodeDataset subset = node_dataset(data, topology, n.id, names);
    try {
      trained[i] = train_node(subset, data, arch, cfg, node_seed(cfg.seed, n.id));
    } catch (const Error& e) {
      throw Error(e.code(), describe(n) + ": " + e.what());
    }
  });

  std::map<NodeId, Head> heads;
  std::map<NodeId, std::vector<double>> history;
  for (std::size_t i = 0; i < order.size(); ++i) {
    heads.emplace(order[i], std::move(trained[i]->head));
    history.emplace(order[i], std::move(trained[i]->loss_history));
  }
  return {TreeClassifier(topology, std::vector<std::string>(names.begin(), names.end()), std::move(heads)),
          std::move(history)};
}

void save_tree(const TreeClassifier& tree, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "nodes");
  detail::write_text_file(dir / "topology.json", tree.topology().to_json());
  json nodes = json::object();
  double dropout = 0.0;
  for (const auto& [id, head] : tree.heads()) {
    const std::string file = "nodes/node_" + std::to_string(id) + ".dare";
    nodes[std::to_string(id)] = file;
    dropout = head.dropout_rate();
    WeightFile wf;
    wf.name = tree.topology().node(id).name;
    for (std::size_t l = 0; l < head.layers().size(); ++l) {
      const DenseSpec& layer = head.layers()[l];
      WeightRecord rec;
      rec.layer_index = static_cast<std::uint32_t>(l);
      rec.kind = WeightRecord::Kind::Dense;
      rec.dims = {static_cast<std::uint32_t>(layer.out_width), static_cast<std::uint32_t>(layer.in_width)};
      rec.weights.assign(layer.weights.begin(), layer.weights.end());
      rec.biases.assign(layer.biases.begin(), layer.biases.end());
      wf.records.push_back(std::move(rec));
    }
    write_weight_file(wf, dir / file);
  }
  const json doc{{"names", tree.names()}, {"dropout_rate", dropout}, {"nodes", nodes}};
  detail::write_text_file(dir / "tree.json", doc.dump(2) + "\n");
}

TreeClassifier load_tree(const std::filesystem::path& dir) {
  TreeTopology topology = load_topology(dir / "topology.json");
  const std::string where = (dir / "tree.json").string();
  const json doc = detail::parse_json(detail::read_text_file(dir / "tree.json"), ErrorCode::CorruptFile, where);
  auto names = detail::require<std::vector<std::string>>(doc, "names", ErrorCode::CorruptFile, where);
  const double dropout = detail::require<double>(doc, "dropout_rate", ErrorCode::CorruptFile, where);
  const auto nodes = detail::require<std::map<std::string, std::string>>(doc, "nodes", ErrorCode::CorruptFile, where);
  std::map<NodeId, Head> heads;
  for (const auto& [key, file] : nodes) {
    const NodeId id = std::stoi(key);
    const WeightFile wf = read_weight_file(dir / file);
    std::vector<DenseSpec> layers;
    for (std::size_t l = 0; l < wf.records.size(); ++l) {
      const WeightRecord& rec = wf.records[l];
      if (rec.kind != WeightRecord::Kind::Dense || rec.dims.size() != 2 || rec.layer_index != l) {
        fail(ErrorCode::WeightMismatch, file + " is not a dense head");
      }
      DenseSpec layer{rec.dims[1], rec.dims[0], Vector1(rec.weights.begin(), rec.weights.end()),
                      Vector1(rec.biases.begin(), rec.biases.end()),
                      l + 1 == wf.records.size() ? Activation::None : Activation::Relu};
      layers.push_back(std::move(layer));
    }
    heads.emplace(id, Head(std::move(layers), dropout));
  }
  return TreeClassifier(std::move(topology), std::move(names), std::move(heads));
}

}  // namespace dare
