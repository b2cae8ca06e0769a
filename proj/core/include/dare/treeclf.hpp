#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dare/dataio.hpp"
#include "dare/head.hpp"

namespace dare {

using NodeId = int;

/// A branch of a node leads either to another node or to a class leaf.
struct Branch {
  std::optional<NodeId> child;
  std::string leaf;  // label name when child is empty

  bool is_leaf() const noexcept { return !child.has_value(); }
};

struct TreeNode {
  NodeId id = 0;
  std::string name;
  std::vector<Branch> branches;
  /// Labels routed through each branch (resolved from the tree).
  std::vector<std::vector<std::string>> groups;

  std::size_t arity() const noexcept { return branches.size(); }
};

/// Validated rooted tree of classifier nodes.
///
/// Topology file (JSON):
///   {"root": 0, "labels": [...optional universe...],
///    "nodes": [{"id": 0, "name": "RootNet",
///               "branches": [{"child": 1}, {"leaf": "null"}],
///               "groups": [[...], ["null"]]}]}
/// "groups" is optional; when present it must equal the leaf sets reached
/// through each branch.
class TreeTopology {
 public:
  /// Validates structure. When `universe` is given, leaves must cover it
  /// exactly. Throws CycleDetected, InvalidTopology, DuplicateLeaf,
  /// UncoveredLabel, UnknownLabel, ArityMismatch, GroupMismatch.
  TreeTopology(std::vector<TreeNode> nodes, NodeId root,
               std::optional<std::vector<std::string>> universe = std::nullopt);

  NodeId root() const noexcept { return root_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& node(NodeId id) const;
  bool contains(NodeId id) const { return index_.count(id) > 0; }

  /// Node ids in breadth-first order from the root (branch order).
  std::vector<NodeId> breadth_first() const;
  /// Every leaf label, depth-first in branch order.
  std::vector<std::string> leaves() const;
  std::size_t internal_count() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const { return leaves().size(); }
  /// Labels reachable under a node.
  std::vector<std::string> reachable_labels(NodeId id) const;
  /// Optional label universe declared in the file.
  const std::optional<std::vector<std::string>>& universe() const noexcept { return universe_; }

  std::string to_json() const;

 private:
  std::vector<TreeNode> nodes_;
  std::map<NodeId, std::size_t> index_;
  NodeId root_ = 0;
  std::optional<std::vector<std::string>> universe_;
};

TreeTopology parse_topology(std::string_view json_text);
TreeTopology load_topology(const std::filesystem::path& path);

/// One node classifying all given labels at once (the flat baseline).
TreeTopology flat_topology(const std::vector<std::string>& labels, std::string name = "FlatNet");

/// Samples kept for one node, relabeled to branch indices.
struct NodeDataset {
  NodeId node = 0;
  std::size_t arity = 0;
  std::vector<std::size_t> sample_indices;
  std::vector<std::size_t> branch_labels;
  std::vector<std::size_t> branch_counts;

  std::size_t size() const noexcept { return sample_indices.size(); }
  std::size_t populated_branches() const;
};

/// Keeps samples whose true label is reachable under `node` and maps each
/// to the branch whose group holds it. `names` maps dataset label indices
/// to label strings.
NodeDataset node_dataset(const FeatureDataset& data, const TreeTopology& topology, NodeId node,
                         std::span<const std::string> names);

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;  // nodes trained concurrently; results do not depend on it
};

struct TrainedNode {
  Head head;
  std::vector<double> loss_history;  // mean training loss per epoch
};

/// Mini-batch SGD with momentum over seeded shuffles; the batch gradient is
/// the mean of per-sample gradients. Throws DegenerateNode when fewer than
/// two branches have samples, InvalidConfig for a bad TrainConfig.
TrainedNode train_node(const NodeDataset& subset, const FeatureDataset& data, const HeadArchitecture& arch,
                       const TrainConfig& cfg, std::uint64_t seed);

/// Seed used for a node: independent of training order.
std::uint64_t node_seed(std::uint64_t base, NodeId node) noexcept;

struct Prediction {
  std::size_t label = 0;  // index into the classifier's label names
  std::string label_name;
  std::vector<NodeId> path;
  std::vector<Vector1> node_probabilities;  // parallel to path
};

/// A topology with one trained head per internal node. Immutable once built.
class TreeClassifier {
 public:
  /// Throws InvalidTopology if a node lacks a head, ArityMismatch if a
  /// head's output width disagrees with its node, UncoveredLabel if a
  /// leaf is not in `names`.
  TreeClassifier(TreeTopology topology, std::vector<std::string> names, std::map<NodeId, Head> heads);

  const TreeTopology& topology() const noexcept { return topology_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const Head& head(NodeId id) const { return heads_.at(id); }
  const std::map<NodeId, Head>& heads() const noexcept { return heads_; }
  std::size_t input_width() const;

  /// Hard routing: argmax branch at each node (ties to the lowest index)
  /// until a leaf. Throws LengthMismatch.
  Prediction predict(std::span<const Scalar> features) const;
  std::size_t classify(std::span<const Scalar> features) const { return predict(features).label; }

 private:
  TreeTopology topology_;
  std::vector<std::string> names_;
  std::map<NodeId, Head> heads_;
};

struct TrainedTree {
  TreeClassifier classifier;
  std::map<NodeId, std::vector<double>> loss_history;
};

/// Trains every node on its own subset. Throws DegenerateNode naming the
/// node; UncoveredLabel when a dataset label is not a leaf.
TrainedTree train_tree(const TreeTopology& topology, const FeatureDataset& data,
                       std::span<const std::string> names, const HeadArchitecture& arch,
                       const TrainConfig& cfg);

/// Archive layout: topology.json, tree.json (label names, dropout, node
/// files) and nodes/node_<id>.dare (dense records, f32).
void save_tree(const TreeClassifier& tree, const std::filesystem::path& dir);
TreeClassifier load_tree(const std::filesystem::path& dir);

}  // namespace dare
