// Tree and filtration builders shared by the tests.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ditree/clustering.hpp"
#include "ditree/filtration.hpp"
#include "ditree/random.hpp"

namespace fixture {

struct Shape {
  std::string name;
  std::vector<Shape> kids;
};

inline std::size_t count_leaves(const Shape& s) {
  if (s.kids.empty()) return 1;
  std::size_t n = 0;
  for (const auto& k : s.kids) n += count_leaves(k);
  return n;
}

struct NamedTree {
  ditree::ClusterTree tree;
  std::vector<std::string> names;  // per tree node
};

// Vertices are numbered by left-to-right leaf order.
inline NamedTree tree_from_shape(const Shape& root) {
  ditree::TreeBuilder b;
  std::vector<std::string> names;
  std::size_t next_vertex = 0;
  std::function<void(const Shape&, std::optional<ditree::NodeId>)> rec = [&](const Shape& s,
                                                                             std::optional<ditree::NodeId> parent) {
    std::vector<std::size_t> members(count_leaves(s));
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = next_vertex + i;
    const auto id = parent ? b.add_child(*parent, members) : b.add_root(members);
    names.resize(id + 1);
    names[id] = s.name;
    if (s.kids.empty()) ++next_vertex;
    for (const auto& k : s.kids) rec(k, id);
  };
  rec(root, std::nullopt);
  return {std::move(b).build(), std::move(names)};
}

// The left tree of the toy example: R -> (C, A, B), C -> (D, E), A -> (G, F),
// D -> (d1, H), G -> (g1, I).
inline Shape toy_left_shape() {
  const Shape d{"D", {{"d1", {}}, {"H", {}}}};
  const Shape g{"G", {{"g1", {}}, {"I", {}}}};
  return {"R", {{"C", {d, {"E", {}}}}, {"A", {g, {"F", {}}}}, {"B", {}}}};
}

// Every internal node gets 2..max_children children; a node stops early with
// probability leaf_prob once below the root.
inline Shape random_shape(ditree::Rng& rng, int depth, std::size_t max_children, double leaf_prob) {
  Shape s;
  if (depth == 0) return s;
  const std::size_t m = 2 + rng.below(max_children - 1);
  for (std::size_t i = 0; i < m; ++i) {
    if (depth > 1 && rng.bernoulli(leaf_prob)) {
      s.kids.push_back({});
    } else {
      s.kids.push_back(random_shape(rng, depth - 1, max_children, leaf_prob));
    }
  }
  return s;
}

// Random positive rational leaf weights (integers 1..20 over their total).
inline ditree::WeightedTree random_weights(const ditree::ClusterTree& tree, ditree::Rng& rng) {
  auto wt = ditree::assign_weights(tree, ditree::WeightScheme::kUniformLeaves);
  const auto leaves = tree.leaves();
  std::vector<ditree::Rational> raw(leaves.size());
  ditree::Rational total = 0;
  for (auto& r : raw) {
    r = static_cast<long>(1 + rng.below(20));
    total += r;
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    wt.weight[leaves[i]] = raw[i] / total;
    wt.weight[leaves[i]].canonicalize();
  }
  for (std::size_t i = tree.size(); i-- > 0;) {
    const auto& n = tree.node(i);
    if (n.children.empty()) continue;
    ditree::Rational s = 0;
    for (const auto c : n.children) s += wt.weight[c];
    wt.weight[i] = s;
  }
  return wt;
}

inline ditree::Filtration random_filtration(std::uint64_t seed, int depth, std::size_t max_children,
                                            double leaf_prob = 0.3) {
  ditree::Rng rng(seed);
  const auto tree = tree_from_shape(random_shape(rng, depth, max_children, leaf_prob)).tree;
  return ditree::build_filtration(random_weights(tree, rng));
}

}  // namespace fixture
