#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ditree/digraph.hpp"

namespace ditree {

class Rng;

using NodeId = std::size_t;

struct ClusterNode {
  NodeId id = 0;
  int level = 0;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;       // left-to-right order
  std::vector<std::size_t> members;   // ascending vertex ids
  bool padding = false;               // single-child link added by pad_to_depth
};

/// Rooted cluster hierarchy over digraph vertices. Node 0 is the root (level 0,
/// all vertices); leaves hold exactly one vertex each.
class ClusterTree {
 public:
  ClusterTree() = default;
  /// Throws InvalidArgument when the partition/level invariants fail.
  explicit ClusterTree(std::vector<ClusterNode> nodes);

  const ClusterNode& root() const { return nodes_.at(0); }
  const ClusterNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<ClusterNode>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t num_vertices() const { return nodes_.empty() ? 0 : root().members.size(); }
  int depth() const;

  /// Leaves in left-to-right (depth-first) order.
  std::vector<NodeId> leaves() const;
  NodeId leaf_of(std::size_t vertex) const;

  /// For every vertex (indexed by position in root().members order, i.e. by
  /// vertex id when ids are 0..N-1), the node at `level` on its root path;
  /// vertices whose leaf sits above `level` map to that leaf.
  std::vector<NodeId> level_assignment(int level) const;

  bool operator==(const ClusterTree& other) const;

 private:
  void validate() const;
  std::vector<ClusterNode> nodes_;
  std::vector<NodeId> leaf_of_vertex_;
};

/// Incrementally assembles a ClusterTree; levels follow from parent links.
class TreeBuilder {
 public:
  NodeId add_root(std::vector<std::size_t> members);
  NodeId add_child(NodeId parent, std::vector<std::size_t> members, bool padding = false);
  /// Copies every descendant of `sub`'s root under `parent`; the two node
  /// member sets must agree.
  void graft(NodeId parent, const ClusterTree& sub);
  ClusterTree build() &&;

 private:
  void graft_children(NodeId into, const ClusterTree& sub, NodeId from);
  std::vector<ClusterNode> nodes_;
};

std::string tree_to_json(const ClusterTree& tree);
ClusterTree tree_from_json(std::string_view text);

/// Target cluster counts k_1 < ... < k_L, coarsest level first.
struct LevelSpec {
  std::vector<std::size_t> counts;

  std::size_t depth() const noexcept { return counts.size(); }
  /// Requires 1 < k_1 < ... < k_L < n.
  void validate(std::size_t n) const;
  static LevelSpec parse(std::string_view csv);
};

/// Per-vertex class ids; -1 marks an unlabeled vertex.
using VertexClasses = std::vector<int>;

/// Nested flat partitions, coarsest first. assignments[l][v] is the cluster of
/// vertex v at level l+1, with cluster ids dense from 0.
struct Hierarchy {
  std::vector<std::vector<int>> assignments;
};

/// Tree with root -> levels of `h` -> single-vertex leaves. Vertex v of the
/// hierarchy becomes global vertex `ids[v]`. Children are ordered by their
/// smallest member.
ClusterTree tree_from_hierarchy(const Hierarchy& h, std::span<const std::size_t> ids);

struct MedoidResult {
  std::vector<int> assignment;          // cluster per point
  std::vector<std::size_t> centers;     // medoid per cluster
  std::size_t iterations = 0;
  std::vector<double> costs;            // total cost after each assignment sweep
};

/// How centers beyond the preferred ones are drawn.
enum class MedoidInit {
  kUniform,   // k distinct vertices uniformly at random
  kPlusPlus,  // each next center drawn with probability proportional to d^2 to the chosen ones
};

/// Center/medoid iteration: assign to the nearest center (ties to the lowest
/// center id), move each center to the member minimizing the summed distance
/// when that strictly lowers the cost, stop when no center moves or after
/// `max_iterations`. Initial centers are `preferred` (deduplicated, at most k)
/// topped up at random per `init`. Empty clusters are re-seeded with the point
/// farthest from its current center.
MedoidResult k_medoids(const DistanceMatrix& d, std::size_t k, Rng& rng,
                       std::span<const std::size_t> preferred = {}, std::size_t max_iterations = 100,
                       MedoidInit init = MedoidInit::kPlusPlus);

/// A1(i,j) = sum of A0(u,v) over u in cluster i, v in cluster j.
UndirectedGraph coarse_grain(const UndirectedGraph& g, std::span<const int> partition);

struct NhcOptions {
  std::size_t max_iterations = 100;
  EdgeLength length = EdgeLength::kInverseWeight;
  MedoidInit init = MedoidInit::kPlusPlus;
  std::size_t restarts = 1;  // independent medoid runs per level; the cheapest is kept
};

struct MllOptions {
  std::size_t n_eig = 30;
  double t = 1.0;
  std::size_t max_iterations = 100;
  MedoidInit init = MedoidInit::kPlusPlus;
  std::size_t restarts = 1;
};

struct MboOptions {
  std::size_t n_eig = 50;
  double dt = 0.01;
  double tol = 1e-3;
  double fidelity = 50.0;
  std::size_t max_sweeps = 300;
  std::size_t diffusion_steps = 3;
};

Hierarchy nhc_hierarchy(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed,
                        const VertexClasses* labels = nullptr, const NhcOptions& options = {});
ClusterTree nhc_cluster(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed,
                        const VertexClasses* labels = nullptr, const NhcOptions& options = {});

/// Diffusion embedding: rows are vertices, columns lambda_i^t * psi_i for the
/// n_eig largest eigenvalues of the random-walk matrix D^-1 A.
struct Embedding {
  std::vector<double> eigenvalues;            // descending
  std::vector<std::vector<double>> coords;    // [vertex][component]
};
Embedding diffusion_embedding(const UndirectedGraph& g, std::size_t n_eig, double t);

Hierarchy mll_hierarchy(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed,
                        const VertexClasses* labels = nullptr, const MllOptions& options = {});
ClusterTree mll_cluster(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed,
                        const VertexClasses* labels = nullptr, const MllOptions& options = {});

/// Graph MBO in the span of the lowest n_eig eigenvectors of the symmetric
/// normalized Laplacian. Labeled vertices carry class ids in [0, n_classes);
/// unlabeled vertices start at the uniform class mixture. Returns a class per
/// vertex (ties to the lowest class). Throws UnsupportedMode when nothing is
/// labeled.
std::vector<int> mbo_cluster(const UndirectedGraph& g, const VertexClasses& labels, std::size_t n_classes,
                             const MboOptions& options = {});

enum class Algorithm { kNHC, kMLL, kMBO };
Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm a);

struct TwtOptions {
  Algorithm algorithm = Algorithm::kNHC;
  LevelSpec levels{{2, 5}};
  std::uint64_t seed = 0;
  std::size_t tiny_component = 4;  // smaller components attach vertices directly
  NhcOptions nhc;
  MllOptions mll;
  MboOptions mbo;
};

struct TwinTrees {
  ClusterTree es;
  ClusterTree os;
};

/// Twin-tree construction: weak components of W_e under the root (the single
/// component is the root itself when W is weakly connected), each component's
/// ES (resp. OS) graph clustered into a subtree. `labels` (per global vertex,
/// -1 unlabeled) drive the semi-supervised variants and are required for MBO.
TwinTrees twt(const WeightedDigraph& w, const TwtOptions& options, const VertexClasses* labels = nullptr);

/// Repeats every leaf shallower than `depth` as its own only child down to
/// `depth`; the added links are flagged `padding`.
ClusterTree pad_to_depth(const ClusterTree& tree, int depth);

}  // namespace ditree
