#include <algorithm>
#include <cstdio>
#include <deque>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ditree/error.hpp"
#include "ditree/filtration.hpp"

namespace ditree {

WeightScheme parse_weight_scheme(std::string_view name) {
  if (name == "uniform" || name == "uniform_leaves") return WeightScheme::kUniformLeaves;
  if (name == "volume" || name == "volume_leaves") return WeightScheme::kVolumeLeaves;
  throw InvalidArgument("unknown weight scheme '" + std::string(name) + "'");
}

WeightedTree assign_weights(const ClusterTree& tree, WeightScheme scheme, const UndirectedGraph* graph) {
  WeightedTree out{tree, std::vector<Rational>(tree.size()), {}};
  const auto leaves = tree.leaves();
  std::vector<Rational> leaf_weight(leaves.size(), Rational(1));
  if (scheme == WeightScheme::kVolumeLeaves) {
    if (graph == nullptr) throw InvalidArgument("volume_leaves needs the symmetrized graph");
    Rational total = 0;
    std::size_t positive = 0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      const auto v = tree.node(leaves[i]).members.front();
      if (v >= graph->size()) throw InvalidArgument("tree vertex missing from graph");
      leaf_weight[i] = Rational(graph->degree(v));
      if (leaf_weight[i] > 0) {
        total += leaf_weight[i];
        ++positive;
      }
    }
    const Rational fallback = positive == 0 ? Rational(1) : Rational(total / positive);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (leaf_weight[i] > 0) continue;
      leaf_weight[i] = fallback;
      out.warnings.push_back("vertex " + std::to_string(tree.node(leaves[i]).members.front()) +
                             " has zero volume; using the mean volume");
    }
  }
  Rational total = 0;
  for (const auto& w : leaf_weight) total += w;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    Rational w = leaf_weight[i] / total;
    w.canonicalize();
    out.weight[leaves[i]] = w;
  }
  // Internal weights bottom-up, deepest level first.
  std::vector<NodeId> order(tree.size());
  for (NodeId i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId x, NodeId y) { return tree.node(x).level > tree.node(y).level; });
  for (const auto id : order) {
    const auto& n = tree.node(id);
    if (n.children.empty()) continue;
    Rational s = 0;
    for (const auto c : n.children) s += out.weight[c];
    out.weight[id] = s;
  }
  return out;
}

int Filtration::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.level);
  return d;
}

std::size_t Filtration::leaf_position(std::size_t vertex) const {
  if (vertex >= position_of_vertex_.size() || position_of_vertex_[vertex] == SIZE_MAX) {
    throw InvalidArgument("vertex " + std::to_string(vertex) + " is not a leaf of the filtration");
  }
  return position_of_vertex_[vertex];
}

Filtration build_filtration(const WeightedTree& wt) {
  const ClusterTree& tree = wt.tree;
  if (wt.weight.size() != tree.size()) throw InvalidArgument("one weight per tree node required");
  for (const auto& n : tree.nodes()) {
    if (wt.weight[n.id] <= 0) throw InvalidArgument("filtration weights must be positive");
    if (n.children.empty()) continue;
    Rational s = 0;
    for (const auto c : n.children) s += wt.weight[c];
    if (s != wt.weight[n.id]) throw InvalidArgument("children's weights must sum to the parent's weight");
  }
  if (wt.weight[0] != 1) throw InvalidArgument("root weight must be 1");

  auto skip_chain = [&](NodeId id) {
    while (tree.node(id).children.size() == 1) id = tree.node(id).children.front();
    return id;
  };
  Filtration f;
  const NodeId root = skip_chain(0);
  if (tree.node(root).children.empty()) throw InvalidArgument("filtration needs at least two leaves");

  struct Item {
    NodeId tree_node;
    std::optional<std::size_t> parent;
  };
  // Preorder keeps leaves left to right.
  std::vector<Item> stack{{root, std::nullopt}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    const std::size_t idx = f.nodes_.size();
    FiltrationNode fn;
    fn.tree_node = it.tree_node;
    fn.parent = it.parent;
    fn.weight = wt.weight[it.tree_node];
    if (it.parent) {
      auto& p = f.nodes_[*it.parent];
      fn.level = p.level + 1;
      fn.a = p.children.empty() ? p.a : f.nodes_[p.children.back()].b;
      p.children.push_back(idx);
    } else {
      fn.a = 0;
    }
    fn.b = fn.a + fn.weight;
    f.nodes_.push_back(std::move(fn));
    const auto& children = tree.node(it.tree_node).children;
    for (auto c = children.rbegin(); c != children.rend(); ++c) stack.push_back({skip_chain(*c), idx});
  }
  // Leaf ranges, bottom-up (children always follow their parent in preorder).
  f.edges_.push_back(0);
  std::size_t max_vertex = 0;
  for (std::size_t i = 0; i < f.nodes_.size(); ++i) {
    auto& n = f.nodes_[i];
    if (!n.children.empty()) continue;
    n.leaf_lo = f.leaves_.size();
    n.leaf_hi = n.leaf_lo + 1;
    f.leaves_.push_back(i);
    f.edges_.push_back(n.b);
    const auto v = tree.node(n.tree_node).members.front();
    f.leaf_vertex_.push_back(v);
    max_vertex = std::max(max_vertex, v);
  }
  for (std::size_t i = f.nodes_.size(); i-- > 0;) {
    auto& n = f.nodes_[i];
    if (n.children.empty()) continue;
    n.leaf_lo = f.nodes_[n.children.front()].leaf_lo;
    n.leaf_hi = f.nodes_[n.children.back()].leaf_hi;
  }
  f.position_of_vertex_.assign(max_vertex + 1, SIZE_MAX);
  for (std::size_t i = 0; i < f.leaf_vertex_.size(); ++i) f.position_of_vertex_[f.leaf_vertex_[i]] = i;
  return f;
}

LloEnumeration::LloEnumeration(const Filtration& f) : index_of_node_(f.size()) {
  entries_.push_back({0, 0, 0});
  index_of_node_[0] = 0;
  level_starts_.push_back(0);
  std::vector<std::size_t> level{0};
  while (!level.empty()) {
    level_starts_.push_back(entries_.size());
    std::vector<std::size_t> next;
    for (const auto v : level) {
      const auto& children = f.node(v).children;
      for (std::size_t l = 0; l < children.size(); ++l) {
        if (l > 0) {
          index_of_node_[children[l]] = entries_.size();
          entries_.push_back({children[l], v, l});
        }
        next.push_back(children[l]);
      }
    }
    level = std::move(next);
  }
  if (entries_.size() != f.num_leaves()) throw Error("LLO count does not match the number of leaves");
}

std::optional<std::size_t> LloEnumeration::index_of(std::size_t node) const { return index_of_node_.at(node); }

std::string filtration_to_json(const Filtration& f) {
  using nlohmann::json;
  json nodes = json::array();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& n = f.node(i);
    json j{{"node", i},
           {"tree_node", n.tree_node},
           {"weight", n.weight.get_d()},
           {"interval", {n.a.get_d(), n.b.get_d()}}};
    j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
    nodes.push_back(std::move(j));
  }
  return json{{"nodes", std::move(nodes)}}.dump();
}

std::string rectangles_csv(const Filtration& es, const Filtration& os) {
  if (es.num_leaves() != os.num_leaves()) throw InvalidArgument("filtrations cover different vertex sets");
  std::vector<std::size_t> vertices;
  for (std::size_t i = 0; i < es.num_leaves(); ++i) vertices.push_back(es.leaf_vertex(i));
  std::sort(vertices.begin(), vertices.end());
  std::ostringstream out;
  out << "node_id,x0,x1,y0,y1\n";
  char buf[160];
  for (const auto v : vertices) {
    const auto i = es.leaf_position(v);
    const auto j = os.leaf_position(v);
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", v, es.leaf_edges()[i].get_d(),
                  es.leaf_edges()[i + 1].get_d(), os.leaf_edges()[j].get_d(), os.leaf_edges()[j + 1].get_d());
    out << buf;
  }
  return out.str();
}

}  // namespace ditree
