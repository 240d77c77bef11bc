#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "ditree/clustering.hpp"

namespace ditree {

using Rational = mpq_class;

enum class WeightScheme { kUniformLeaves, kVolumeLeaves };
WeightScheme parse_weight_scheme(std::string_view name);

struct WeightedTree {
  ClusterTree tree;
  std::vector<Rational> weight;       // per tree node; internal = sum of children
  std::vector<std::string> warnings;  // e.g. zero-volume leaves that fell back to uniform
};

/// kVolumeLeaves weighs each leaf by the weighted degree of its vertex in
/// `graph` (required for that scheme). Leaves of zero volume get the mean
/// volume instead and a warning is recorded.
WeightedTree assign_weights(const ClusterTree& tree, WeightScheme scheme, const UndirectedGraph* graph = nullptr);

struct FiltrationNode {
  NodeId tree_node = 0;  // deepest tree node of the collapsed chain
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  int level = 0;         // depth after chain collapsing
  Rational weight;
  Rational a;            // interval [a, b)
  Rational b;
  std::size_t leaf_lo = 0;  // leaves covered, in left-to-right leaf order
  std::size_t leaf_hi = 0;
};

/// Finite filtration of [0,1): every node is a half-open interval, children
/// tile their parent left to right, every internal node has >= 2 children.
class Filtration {
 public:
  const std::vector<FiltrationNode>& nodes() const noexcept { return nodes_; }
  const FiltrationNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }
  int depth() const;

  /// Leaf node indices left to right; leaf i covers [leaf_edges()[i], leaf_edges()[i+1]).
  const std::vector<std::size_t>& leaves() const noexcept { return leaves_; }
  std::size_t num_leaves() const noexcept { return leaves_.size(); }
  const std::vector<Rational>& leaf_edges() const noexcept { return edges_; }
  /// Digraph vertex held by leaf position i.
  std::size_t leaf_vertex(std::size_t i) const { return leaf_vertex_.at(i); }
  /// Leaf position of a digraph vertex.
  std::size_t leaf_position(std::size_t vertex) const;

  double a(std::size_t i) const { return node(i).a.get_d(); }
  double b(std::size_t i) const { return node(i).b.get_d(); }

 private:
  friend Filtration build_filtration(const WeightedTree& wt);
  std::vector<FiltrationNode> nodes_;
  std::vector<std::size_t> leaves_;
  std::vector<Rational> edges_;
  std::vector<std::size_t> leaf_vertex_;
  std::vector<std::size_t> position_of_vertex_;
};

/// Collapses single-child chains, then lays intervals out left to right.
/// Throws InvalidArgument when the weights do not add up or when the tree
/// degenerates to a lone leaf.
Filtration build_filtration(const WeightedTree& wt);

/// Leave Left Out enumeration: index 0 is the root, then level by level and
/// left to right every child that is not the leftmost child of its parent.
struct LloEntry {
  std::size_t node = 0;      // filtration node u
  std::size_t parent = 0;    // its parent v (unused for n = 0)
  std::size_t position = 0;  // ell: u is child number ell of v
};

class LloEnumeration {
 public:
  explicit LloEnumeration(const Filtration& f);
  std::size_t size() const noexcept { return entries_.size(); }
  const LloEntry& operator[](std::size_t n) const { return entries_.at(n); }
  /// M_l: first LLO index of level l (M_0 = 0, M_1 = 1), plus a final sentinel.
  const std::vector<std::size_t>& level_starts() const noexcept { return level_starts_; }
  /// LLO index of a filtration node, or nullopt for leftmost children.
  std::optional<std::size_t> index_of(std::size_t node) const;

 private:
  std::vector<LloEntry> entries_;
  std::vector<std::size_t> level_starts_;
  std::vector<std::optional<std::size_t>> index_of_node_;
};

/// JSON {nodes: [{node, tree_node, parent, weight, interval: [a, b)}]}.
std::string filtration_to_json(const Filtration& f);

/// CSV node_id,x0,x1,y0,y1 of the leaf rectangles for two filtrations over the
/// same vertices, one row per vertex.
std::string rectangles_csv(const Filtration& es, const Filtration& os);

}  // namespace ditree
