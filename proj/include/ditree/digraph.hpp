#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

namespace ditree {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct VertexRecord {
  std::string name;     // original identifier from the input
  std::string payload;  // opaque data carried by the vertex
  std::string label;    // hierarchical label path "a/b/c"; empty when unlabeled
};

struct WeightedEdge {
  std::size_t source;
  std::size_t target;
  double weight;
};

/// Sparse nonnegative weighted adjacency over dense vertex ids 0..N-1.
/// Absent entries mean weight 0; every stored weight is strictly positive.
class WeightedDigraph {
 public:
  WeightedDigraph() = default;

  /// Duplicate (u,v) entries are summed. Throws InvalidArgument on a nonpositive
  /// weight or an out-of-range endpoint.
  WeightedDigraph(std::vector<VertexRecord> vertices, std::span<const WeightedEdge> edges);

  /// Adopts `matrix` (square, nonnegative). Explicit zeros are pruned.
  WeightedDigraph(std::vector<VertexRecord> vertices, SparseMatrix matrix);

  /// `n` anonymous vertices named "0".."n-1".
  static WeightedDigraph with_vertices(std::size_t n, std::span<const WeightedEdge> edges);

  std::size_t size() const noexcept { return vertices_.size(); }
  std::size_t num_edges() const noexcept { return static_cast<std::size_t>(matrix_.nonZeros()); }
  double weight(std::size_t u, std::size_t v) const;
  double total_weight() const;

  const SparseMatrix& matrix() const noexcept { return matrix_; }
  const std::vector<VertexRecord>& vertices() const noexcept { return vertices_; }
  const VertexRecord& vertex(std::size_t v) const { return vertices_.at(v); }

  /// Edges in row-major (source, target) order.
  std::vector<WeightedEdge> edges() const;

  std::optional<std::size_t> find(std::string_view name) const;
  bool has_labels() const;

  /// Induced subgraph; vertex i of the result is `members[i]` of this graph.
  WeightedDigraph induced(std::span<const std::size_t> members) const;
  WeightedDigraph transpose() const;

  bool operator==(const WeightedDigraph& other) const;

 private:
  std::vector<VertexRecord> vertices_;
  SparseMatrix matrix_;
};

/// Symmetric nonnegative weights; symmetry is checked bitwise on construction.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(SparseMatrix symmetric);

  std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  double weight(std::size_t u, std::size_t v) const;
  /// Weighted degree (row sum, self-loop counted once).
  double degree(std::size_t v) const;
  double total_weight() const;
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  bool is_connected() const;

 private:
  SparseMatrix matrix_;
};

/// Dense all-pairs distances. Unreachable pairs hold `kUnreachable` (+inf).
class DistanceMatrix {
 public:
  static constexpr double kUnreachable = std::numeric_limits<double>::infinity();

  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, kUnreachable) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t u, std::size_t v) const { return d_[u * n_ + v]; }
  double& operator()(std::size_t u, std::size_t v) { return d_[u * n_ + v]; }
  static bool reachable(double d) noexcept { return d != kUnreachable; }
  bool all_reachable() const;
  std::span<const double> row(std::size_t u) const { return {d_.data() + u * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

// --- ingestion ------------------------------------------------------------

/// Reads "src dst [weight]" lines (tab or space separated, '#' comments).
/// Names are reindexed densely in order of first appearance; the original
/// names stay in VertexRecord::name. An optional label stream holds
/// "name label/sublabel" lines; labeled names that never occur in an edge
/// become isolated vertices.
WeightedDigraph load_edge_list(std::istream& edges, std::istream* labels = nullptr);

/// File variant; gzip-compressed inputs are decompressed transparently.
WeightedDigraph load_edge_list_file(const std::filesystem::path& edges,
                                    const std::optional<std::filesystem::path>& labels = std::nullopt);

/// Whole file as text, gunzipping when the file carries the gzip magic bytes.
std::string read_text_file(const std::filesystem::path& path);

/// JSON container {vertices, edges, labels, name_map}.
std::string digraph_to_json(const WeightedDigraph& g);
WeightedDigraph digraph_from_json(std::string_view text);

// --- structure ------------------------------------------------------------

/// W_e = I + W: adds 1 to every diagonal entry (existing self-loops are enhanced).
WeightedDigraph extend(const WeightedDigraph& w);

enum class Symmetrization {
  kES,          // W_e W_e^T  (bibliographic coupling)
  kOS,          // W_e^T W_e  (co-citation)
  kUnderlying,  // (W + W^T) / 2
};

/// For kES/kOS the input is expected to be the extended graph.
UndirectedGraph symmetrize(const WeightedDigraph& w, Symmetrization mode);

struct WeakComponent {
  std::vector<std::size_t> members;  // ascending global vertex ids
  WeightedDigraph graph;             // induced subgraph over `members`
};

/// Weak components, largest first (ties: smallest member id first).
std::vector<WeakComponent> weak_components(const WeightedDigraph& w);

/// Component id per vertex, ids ordered as in weak_components().
std::vector<std::size_t> weak_component_labels(const WeightedDigraph& w);

bool is_strongly_connected(const WeightedDigraph& w);

/// How an edge weight turns into a path length.
enum class EdgeLength {
  kWeight,         // length = weight (path weight is the sum of edge weights)
  kInverseWeight,  // length = 1 / weight (strong ties are short)
};

/// All-pairs shortest paths by Dijkstra from every source.
DistanceMatrix graph_distance(const UndirectedGraph& g, EdgeLength length = EdgeLength::kWeight);

// --- synthetic inputs -----------------------------------------------------

enum class SynthKind { kPlantedPartition, kRandomSparse, kToy25 };

struct SynthParams {
  std::vector<std::size_t> block_sizes{50, 50};  // planted partition
  double p_in = 0.2;
  double p_out = 0.01;
  std::size_t n = 100;    // random sparse
  double density = 0.05;  // random sparse
};

/// Deterministic for a fixed seed. Planted-partition vertices are labeled
/// "block<i>". toy25 draws integer weights 1..4 and resamples until the
/// digraph is strongly connected.
WeightedDigraph synth_digraph(SynthKind kind, const SynthParams& params, std::uint64_t seed);

SynthKind parse_synth_kind(std::string_view name);

}  // namespace ditree
