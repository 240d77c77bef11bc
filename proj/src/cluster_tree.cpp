#include <algorithm>
#include <charconv>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "ditree/clustering.hpp"
#include "ditree/error.hpp"

namespace ditree {

ClusterTree::ClusterTree(std::vector<ClusterNode> nodes) : nodes_(std::move(nodes)) {
  validate();
  std::size_t max_vertex = 0;
  for (const auto v : root().members) max_vertex = std::max(max_vertex, v);
  leaf_of_vertex_.assign(root().members.empty() ? 0 : max_vertex + 1, std::numeric_limits<NodeId>::max());
  for (const auto& n : nodes_) {
    if (n.children.empty()) leaf_of_vertex_[n.members.front()] = n.id;
  }
}

void ClusterTree::validate() const {
  if (nodes_.empty()) throw InvalidArgument("cluster tree has no root");
  const auto& r = nodes_[0];
  if (r.parent || r.level != 0) throw InvalidArgument("node 0 must be the level-0 root");
  std::vector<int> leaf_count;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.id != i) throw InvalidArgument("node ids must equal their position");
    if (n.members.empty()) throw InvalidArgument("cluster node without members");
    if (!std::is_sorted(n.members.begin(), n.members.end()) ||
        std::adjacent_find(n.members.begin(), n.members.end()) != n.members.end()) {
      throw InvalidArgument("node members must be strictly ascending");
    }
    if (i != 0 && !n.parent) throw InvalidArgument("non-root node without parent");
    if (n.children.empty()) {
      if (n.members.size() != 1) throw InvalidArgument("leaf node must hold exactly one vertex");
      const auto v = n.members.front();
      if (leaf_count.size() <= v) leaf_count.resize(v + 1, 0);
      ++leaf_count[v];
      continue;
    }
    std::vector<std::size_t> merged;
    for (const auto c : n.children) {
      if (c >= nodes_.size()) throw InvalidArgument("child id out of range");
      const auto& child = nodes_[c];
      if (child.parent != n.id) throw InvalidArgument("child/parent links disagree");
      if (child.level != n.level + 1) throw InvalidArgument("child level must be parent level + 1");
      merged.insert(merged.end(), child.members.begin(), child.members.end());
    }
    std::sort(merged.begin(), merged.end());
    if (merged != n.members) throw InvalidArgument("children's members must partition the parent's members");
  }
  for (const auto v : r.members) {
    if (v >= leaf_count.size() || leaf_count[v] != 1) throw InvalidArgument("every vertex must be exactly one leaf");
  }
}

int ClusterTree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.level);
  return d;
}

std::vector<NodeId> ClusterTree::leaves() const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const auto& n = nodes_[id];
    if (n.children.empty()) {
      out.push_back(id);
      continue;
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

NodeId ClusterTree::leaf_of(std::size_t vertex) const {
  if (vertex >= leaf_of_vertex_.size() || leaf_of_vertex_[vertex] == std::numeric_limits<NodeId>::max()) {
    throw InvalidArgument("vertex " + std::to_string(vertex) + " is not in the tree");
  }
  return leaf_of_vertex_[vertex];
}

std::vector<NodeId> ClusterTree::level_assignment(int level) const {
  std::vector<NodeId> out(leaf_of_vertex_.size(), std::numeric_limits<NodeId>::max());
  for (const auto v : root().members) {
    NodeId cur = leaf_of_vertex_[v];
    while (nodes_[cur].level > level) cur = *nodes_[cur].parent;
    out[v] = cur;
  }
  return out;
}

bool ClusterTree::operator==(const ClusterTree& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = other.nodes_[i];
    if (a.level != b.level || a.parent != b.parent || a.children != b.children || a.members != b.members ||
        a.padding != b.padding) {
      return false;
    }
  }
  return true;
}

// --- TreeBuilder ------------------------------------------------------------

NodeId TreeBuilder::add_root(std::vector<std::size_t> members) {
  if (!nodes_.empty()) throw InvalidArgument("tree already has a root");
  std::sort(members.begin(), members.end());
  nodes_.push_back({0, 0, std::nullopt, {}, std::move(members), false});
  return 0;
}

NodeId TreeBuilder::add_child(NodeId parent, std::vector<std::size_t> members, bool padding) {
  const NodeId id = nodes_.size();
  std::sort(members.begin(), members.end());
  nodes_.push_back({id, nodes_.at(parent).level + 1, parent, {}, std::move(members), padding});
  nodes_[parent].children.push_back(id);
  return id;
}

void TreeBuilder::graft_children(NodeId into, const ClusterTree& sub, NodeId from) {
  for (const auto c : sub.node(from).children) {
    const auto& child = sub.node(c);
    const NodeId id = add_child(into, child.members, child.padding);
    graft_children(id, sub, c);
  }
}

void TreeBuilder::graft(NodeId parent, const ClusterTree& sub) {
  if (nodes_.at(parent).members != sub.root().members) {
    throw InvalidArgument("grafted subtree covers different vertices");
  }
  graft_children(parent, sub, 0);
}

ClusterTree TreeBuilder::build() && { return ClusterTree(std::move(nodes_)); }

// --- JSON -------------------------------------------------------------------

std::string tree_to_json(const ClusterTree& tree) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    json j{{"id", n.id}, {"level", n.level}, {"children", n.children}, {"members", n.members}};
    j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
    if (n.padding) j["padding"] = true;
    nodes.push_back(std::move(j));
  }
  return json{{"nodes", std::move(nodes)}}.dump();
}

ClusterTree tree_from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    std::vector<ClusterNode> nodes;
    for (const auto& jn : j.at("nodes")) {
      ClusterNode n;
      n.id = jn.at("id").get<NodeId>();
      n.level = jn.at("level").get<int>();
      if (!jn.at("parent").is_null()) n.parent = jn.at("parent").get<NodeId>();
      n.children = jn.at("children").get<std::vector<NodeId>>();
      n.members = jn.at("members").get<std::vector<std::size_t>>();
      n.padding = jn.value("padding", false);
      nodes.push_back(std::move(n));
    }
    return ClusterTree(std::move(nodes));
  } catch (const json::exception& e) {
    throw ParseError(std::string("cluster tree JSON: ") + e.what(), 0);
  }
}

// --- LevelSpec --------------------------------------------------------------

void LevelSpec::validate(std::size_t n) const {
  if (counts.empty()) throw InvalidArgument("level spec needs at least one level");
  if (counts.front() <= 1) throw InvalidArgument("k_1 must exceed 1");
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] <= counts[i - 1]) throw InvalidArgument("level counts must be strictly increasing");
  }
  if (counts.back() >= n) {
    throw InvalidArgument("k_L = " + std::to_string(counts.back()) + " is infeasible for " + std::to_string(n) +
                          " vertices");
  }
}

LevelSpec LevelSpec::parse(std::string_view csv) {
  LevelSpec spec;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const auto tok = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw InvalidArgument("malformed level list '" + std::string(csv) + "'");
    }
    spec.counts.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return spec;
}

// --- construction helpers ---------------------------------------------------

ClusterTree tree_from_hierarchy(const Hierarchy& h, std::span<const std::size_t> ids) {
  const std::size_t n = ids.size();
  for (const auto& a : h.assignments) {
    if (a.size() != n) throw InvalidArgument("hierarchy level size does not match vertex count");
  }
  TreeBuilder b;
  b.add_root(std::vector<std::size_t>(ids.begin(), ids.end()));

  // Recursively split a node's local vertex set by the next level.
  struct Frame {
    NodeId node;
    std::vector<std::size_t> local;
    std::size_t level;
  };
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  std::vector<Frame> stack{{0, std::move(all), 0}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.level == h.assignments.size()) {
      std::vector<std::pair<std::size_t, std::size_t>> by_id;
      for (const auto v : f.local) by_id.emplace_back(ids[v], v);
      std::sort(by_id.begin(), by_id.end());
      for (const auto& [gid, v] : by_id) b.add_child(f.node, {gid});
      continue;
    }
    std::map<int, std::vector<std::size_t>> groups;
    for (const auto v : f.local) groups[h.assignments[f.level][v]].push_back(v);
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> ordered;
    for (auto& [cid, locals] : groups) {
      std::size_t smallest = std::numeric_limits<std::size_t>::max();
      for (const auto v : locals) smallest = std::min(smallest, ids[v]);
      ordered.emplace_back(smallest, std::move(locals));
    }
    std::sort(ordered.begin(), ordered.end());
    std::vector<Frame> next;
    for (auto& [smallest, locals] : ordered) {
      std::vector<std::size_t> members;
      for (const auto v : locals) members.push_back(ids[v]);
      const NodeId child = b.add_child(f.node, std::move(members));
      next.push_back({child, std::move(locals), f.level + 1});
    }
    // Push in reverse so that node ids grow left to right depth-first.
    for (auto it = next.rbegin(); it != next.rend(); ++it) stack.push_back(std::move(*it));
  }
  return std::move(b).build();
}

ClusterTree pad_to_depth(const ClusterTree& tree, int depth) {
  if (depth < tree.depth()) {
    throw InvalidArgument("cannot pad a depth-" + std::to_string(tree.depth()) + " tree to depth " +
                          std::to_string(depth));
  }
  std::vector<ClusterNode> nodes = tree.nodes();
  const std::size_t original = nodes.size();
  for (std::size_t i = 0; i < original; ++i) {
    if (!nodes[i].children.empty()) continue;
    NodeId cur = i;
    while (nodes[cur].level < depth) {
      const NodeId id = nodes.size();
      nodes.push_back({id, nodes[cur].level + 1, cur, {}, nodes[cur].members, true});
      nodes[cur].children.push_back(id);
      cur = id;
    }
  }
  return ClusterTree(std::move(nodes));
}

}  // namespace ditree
