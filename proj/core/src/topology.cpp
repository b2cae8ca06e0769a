#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <string>

#include "dare/error.hpp"
#include "dare/treeclf.hpp"
#include "json_util.hpp"

namespace dare {

using nlohmann::json;

namespace {

std::string node_label(const TreeNode& n) { return "node " + std::to_string(n.id) + " (" + n.name + ")"; }

}  // namespace

TreeTopology::TreeTopology(std::vector<TreeNode> nodes, NodeId root,
                           std::optional<std::vector<std::string>> universe)
    : nodes_(std::move(nodes)), root_(root), universe_(std::move(universe)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i].id, i).second) {
      fail(ErrorCode::InvalidTopology, "duplicate node id " + std::to_string(nodes_[i].id));
    }
  }
  if (!contains(root_)) fail(ErrorCode::InvalidTopology, "root id " + std::to_string(root_) + " not defined");

  std::map<NodeId, int> parents;
  for (const TreeNode& n : nodes_) {
    if (n.arity() < 2) fail(ErrorCode::ArityMismatch, node_label(n) + " needs at least two branches");
    for (const Branch& b : n.branches) {
      if (b.is_leaf()) {
        if (b.leaf.empty()) fail(ErrorCode::InvalidTopology, node_label(n) + " has an unnamed leaf");
        continue;
      }
      if (!contains(*b.child)) {
        fail(ErrorCode::InvalidTopology, node_label(n) + " points to undefined node " + std::to_string(*b.child));
      }
      ++parents[*b.child];
    }
  }

  // Cycles anywhere in the graph, including parts unreachable from the root.
  enum class Mark { None, Active, Done };
  std::map<NodeId, Mark> marks;
  std::function<void(NodeId)> visit = [&](NodeId id) {
    marks[id] = Mark::Active;
    for (const Branch& b : node(id).branches) {
      if (b.is_leaf()) continue;
      const Mark m = marks[*b.child];
      if (m == Mark::Active) {
        fail(ErrorCode::CycleDetected, "cycle through " + node_label(node(*b.child)));
      }
      if (m == Mark::None) visit(*b.child);
    }
    marks[id] = Mark::Done;
  };
  for (const TreeNode& n : nodes_) {
    if (marks[n.id] == Mark::None) visit(n.id);
  }
  if (parents.count(root_)) fail(ErrorCode::CycleDetected, "root is referenced as a child");
  for (const auto& [id, count] : parents) {
    if (count > 1) fail(ErrorCode::InvalidTopology, node_label(node(id)) + " has more than one parent");
  }
  if (breadth_first().size() != nodes_.size()) {
    fail(ErrorCode::InvalidTopology, "some nodes are unreachable from the root");
  }

  const auto all = leaves();
  std::set<std::string> seen;
  for (const auto& label : all) {
    if (!seen.insert(label).second) fail(ErrorCode::DuplicateLeaf, "label '" + label + "' appears twice");
  }
  if (universe_) {
    const std::set<std::string> expected(universe_->begin(), universe_->end());
    for (const auto& label : all) {
      if (!expected.count(label)) fail(ErrorCode::UnknownLabel, "leaf '" + label + "' is not in the label set");
    }
    for (const auto& label : expected) {
      if (!seen.count(label)) fail(ErrorCode::UncoveredLabel, "label '" + label + "' has no leaf");
    }
  }

  for (TreeNode& n : nodes_) {
    std::vector<std::vector<std::string>> derived;
    for (const Branch& b : n.branches) {
      derived.push_back(b.is_leaf() ? std::vector<std::string>{b.leaf} : reachable_labels(*b.child));
    }
    if (!n.groups.empty()) {
      if (n.groups.size() != n.arity()) {
        fail(ErrorCode::ArityMismatch, node_label(n) + " lists " + std::to_string(n.groups.size()) +
                                           " groups for " + std::to_string(n.arity()) + " branches");
      }
      for (std::size_t b = 0; b < n.arity(); ++b) {
        const std::set<std::string> given(n.groups[b].begin(), n.groups[b].end());
        const std::set<std::string> actual(derived[b].begin(), derived[b].end());
        if (given != actual || given.size() != n.groups[b].size()) {
          fail(ErrorCode::GroupMismatch, node_label(n) + " branch " + std::to_string(b) +
                                             " group differs from the leaves below it");
        }
      }
    }
    n.groups = std::move(derived);
  }
}

const TreeNode& TreeTopology::node(NodeId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::InvalidTopology, "no node with id " + std::to_string(id));
  return nodes_[it->second];
}

std::vector<NodeId> TreeTopology::breadth_first() const {
  std::vector<NodeId> order;
  std::deque<NodeId> queue{root_};
  std::set<NodeId> seen{root_};
  while (!queue.empty()) {
    const NodeId id = queue.front();
    queue.pop_front();
    order.push_back(id);
    for (const Branch& b : node(id).branches) {
      if (!b.is_leaf() && seen.insert(*b.child).second) queue.push_back(*b.child);
    }
  }
  return order;
}

std::vector<std::string> TreeTopology::reachable_labels(NodeId id) const {
  std::vector<std::string> out;
  for (const Branch& b : node(id).branches) {
    if (b.is_leaf()) {
      out.push_back(b.leaf);
    } else {
      auto below = reachable_labels(*b.child);
      out.insert(out.end(), below.begin(), below.end());
    }
  }
  return out;
}

std::vector<std::string> TreeTopology::leaves() const { return reachable_labels(root_); }

std::string TreeTopology::to_json() const {
  json nodes = json::array();
  for (const TreeNode& n : nodes_) {
    json branches = json::array();
    for (const Branch& b : n.branches) {
      branches.push_back(b.is_leaf() ? json{{"leaf", b.leaf}} : json{{"child", *b.child}});
    }
    nodes.push_back({{"id", n.id}, {"name", n.name}, {"branches", branches}, {"groups", n.groups}});
  }
  json doc{{"root", root_}, {"nodes", nodes}};
  if (universe_) doc["labels"] = *universe_;
  return doc.dump(2) + "\n";
}

TreeTopology parse_topology(std::string_view json_text) {
  const std::string where = "topology";
  const json doc = detail::parse_json(json_text, ErrorCode::InvalidConfig, where);
  const auto root = detail::require<NodeId>(doc, "root", ErrorCode::InvalidConfig, where);
  const auto items = detail::require<json>(doc, "nodes", ErrorCode::InvalidConfig, where);
  if (!items.is_array()) fail(ErrorCode::InvalidConfig, where + ": 'nodes' must be an array");
  std::vector<TreeNode> nodes;
  for (const json& item : items) {
    TreeNode n;
    n.id = detail::require<NodeId>(item, "id", ErrorCode::InvalidConfig, where);
    const std::string at = where + " node " + std::to_string(n.id);
    n.name = item.contains("name") ? detail::require<std::string>(item, "name", ErrorCode::InvalidConfig, at)
                                   : "node" + std::to_string(n.id);
    const auto branches = detail::require<json>(item, "branches", ErrorCode::InvalidConfig, at);
    if (!branches.is_array()) fail(ErrorCode::InvalidConfig, at + ": 'branches' must be an array");
    for (const json& b : branches) {
      Branch branch;
      if (b.is_object() && b.contains("leaf") && !b.contains("child")) {
        branch.leaf = detail::require<std::string>(b, "leaf", ErrorCode::InvalidConfig, at);
      } else if (b.is_object() && b.contains("child") && !b.contains("leaf")) {
        branch.child = detail::require<NodeId>(b, "child", ErrorCode::InvalidConfig, at);
      } else {
        fail(ErrorCode::InvalidConfig, at + ": a branch is either {leaf} or {child}");
      }
      n.branches.push_back(std::move(branch));
    }
    if (item.contains("groups")) {
      n.groups = detail::require<std::vector<std::vector<std::string>>>(item, "groups", ErrorCode::InvalidConfig, at);
    }
    nodes.push_back(std::move(n));
  }
  std::optional<std::vector<std::string>> universe;
  if (doc.contains("labels")) {
    universe = detail::require<std::vector<std::string>>(doc, "labels", ErrorCode::InvalidConfig, where);
  }
  return TreeTopology(std::move(nodes), root, std::move(universe));
}

TreeTopology load_topology(const std::filesystem::path& path) {
  return parse_topology(detail::read_text_file(path));
}

TreeTopology flat_topology(const std::vector<std::string>& labels, std::string name) {
  TreeNode n;
  n.id = 0;
  n.name = std::move(name);
  for (const auto& label : labels) n.branches.push_back(Branch{std::nullopt, label});
  return TreeTopology({std::move(n)}, 0, labels);
}

}  // namespace dare
