#include "ditree/digraph.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ditree/error.hpp"
#include "ditree/random.hpp"

namespace ditree {

namespace {

using Triplet = Eigen::Triplet<double, int>;

SparseMatrix from_triplets(std::size_t n, const std::vector<Triplet>& triplets) {
  SparseMatrix m(static_cast<int>(n), static_cast<int>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());  // duplicates are summed
  m.makeCompressed();
  return m;
}

std::vector<VertexRecord> anonymous_vertices(std::size_t n) {
  std::vector<VertexRecord> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i].name = std::to_string(i);
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Content of a line with any '#' comment removed.
std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return trim(hash == std::string_view::npos ? line : line.substr(0, hash));
}

}  // namespace

// --- WeightedDigraph --------------------------------------------------------

WeightedDigraph::WeightedDigraph(std::vector<VertexRecord> vertices, std::span<const WeightedEdge> edges)
    : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  std::vector<Triplet> triplets;
  triplets.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.source >= n || e.target >= n) throw InvalidArgument("edge endpoint out of range");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw InvalidArgument("edge weights must be finite and strictly positive");
    }
    triplets.emplace_back(static_cast<int>(e.source), static_cast<int>(e.target), e.weight);
  }
  matrix_ = from_triplets(n, triplets);
}

WeightedDigraph::WeightedDigraph(std::vector<VertexRecord> vertices, SparseMatrix matrix)
    : vertices_(std::move(vertices)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || static_cast<std::size_t>(matrix_.rows()) != vertices_.size()) {
    throw InvalidArgument("adjacency matrix shape does not match the vertex count");
  }
  matrix_.prune(0.0);
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix_, r); it; ++it) {
      if (!(it.value() > 0.0) || !std::isfinite(it.value())) {
        throw InvalidArgument("adjacency entries must be nonnegative and finite");
      }
    }
  }
  matrix_.makeCompressed();
}

WeightedDigraph WeightedDigraph::with_vertices(std::size_t n, std::span<const WeightedEdge> edges) {
  return WeightedDigraph(anonymous_vertices(n), edges);
}

double WeightedDigraph::weight(std::size_t u, std::size_t v) const {
  return matrix_.coeff(static_cast<int>(u), static_cast<int>(v));
}

double WeightedDigraph::total_weight() const { return matrix_.sum(); }

std::vector<WeightedEdge> WeightedDigraph::edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(num_edges());
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix_, r); it; ++it) {
      out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(it.col()), it.value()});
    }
  }
  return out;
}

std::optional<std::size_t> WeightedDigraph::find(std::string_view name) const {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (vertices_[i].name == name) return i;
  }
  return std::nullopt;
}

bool WeightedDigraph::has_labels() const {
  return std::any_of(vertices_.begin(), vertices_.end(), [](const auto& v) { return !v.label.empty(); });
}

WeightedDigraph WeightedDigraph::induced(std::span<const std::size_t> members) const {
  std::vector<int> local(size(), -1);
  std::vector<VertexRecord> verts;
  verts.reserve(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    local.at(members[i]) = static_cast<int>(i);
    verts.push_back(vertices_[members[i]]);
  }
  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (SparseMatrix::InnerIterator it(matrix_, static_cast<int>(members[i])); it; ++it) {
      if (local[it.col()] >= 0) triplets.emplace_back(static_cast<int>(i), local[it.col()], it.value());
    }
  }
  return WeightedDigraph(std::move(verts), from_triplets(members.size(), triplets));
}

WeightedDigraph WeightedDigraph::transpose() const {
  SparseMatrix t = matrix_.transpose();
  return WeightedDigraph(vertices_, std::move(t));
}

bool WeightedDigraph::operator==(const WeightedDigraph& other) const {
  if (size() != other.size() || num_edges() != other.num_edges()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& a = vertices_[i];
    const auto& b = other.vertices_[i];
    if (a.name != b.name || a.payload != b.payload || a.label != b.label) return false;
  }
  const auto ea = edges();
  const auto eb = other.edges();
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (ea[i].source != eb[i].source || ea[i].target != eb[i].target || ea[i].weight != eb[i].weight) return false;
  }
  return true;
}

// --- UndirectedGraph --------------------------------------------------------

UndirectedGraph::UndirectedGraph(SparseMatrix symmetric) : matrix_(std::move(symmetric)) {
  if (matrix_.rows() != matrix_.cols()) throw InvalidArgument("undirected graph needs a square matrix");
  matrix_.prune(0.0);
  matrix_.makeCompressed();
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix_, r); it; ++it) {
      if (it.value() < 0.0) throw InvalidArgument("undirected graph weights must be nonnegative");
      if (matrix_.coeff(it.col(), r) != it.value()) throw InvalidArgument("weight matrix is not symmetric");
    }
  }
}

double UndirectedGraph::weight(std::size_t u, std::size_t v) const {
  return matrix_.coeff(static_cast<int>(u), static_cast<int>(v));
}

double UndirectedGraph::degree(std::size_t v) const {
  double d = 0.0;
  for (SparseMatrix::InnerIterator it(matrix_, static_cast<int>(v)); it; ++it) d += it.value();
  return d;
}

double UndirectedGraph::total_weight() const { return matrix_.sum(); }

bool UndirectedGraph::is_connected() const {
  const std::size_t n = size();
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (SparseMatrix::InnerIterator it(matrix_, u); it; ++it) {
      if (!seen[it.col()]) {
        seen[it.col()] = 1;
        ++count;
        stack.push_back(it.col());
      }
    }
  }
  return count == n;
}

bool DistanceMatrix::all_reachable() const {
  return std::all_of(d_.begin(), d_.end(), [](double d) { return reachable(d); });
}

// --- ingestion --------------------------------------------------------------

WeightedDigraph load_edge_list(std::istream& edges, std::istream* labels) {
  std::vector<VertexRecord> verts;
  std::unordered_map<std::string, std::size_t> index;
  auto intern = [&](std::string_view name) {
    auto [it, inserted] = index.try_emplace(std::string(name), verts.size());
    if (inserted) verts.push_back({std::string(name), {}, {}});
    return it->second;
  };

  std::vector<WeightedEdge> list;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(edges, line)) {
    ++lineno;
    const auto content = strip_comment(line);
    if (content.empty()) continue;
    const auto tokens = split_ws(content);
    if (tokens.size() < 2 || tokens.size() > 3) {
      throw ParseError("expected 'src dst [weight]', got '" + std::string(content) + "'", lineno);
    }
    double w = 1.0;
    if (tokens.size() == 3) {
      const auto tok = tokens[2];
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), w);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(w)) {
        throw ParseError("malformed weight '" + std::string(tok) + "'", lineno);
      }
      if (w <= 0.0) throw ParseError("edge weight must be strictly positive", lineno);
    }
    const std::size_t u = intern(tokens[0]);
    const std::size_t v = intern(tokens[1]);
    list.push_back({u, v, w});
  }

  if (labels != nullptr) {
    lineno = 0;
    while (std::getline(*labels, line)) {
      ++lineno;
      const auto content = strip_comment(line);
      if (content.empty()) continue;
      const auto split = content.find_first_of(" \t");
      if (split == std::string_view::npos) throw ParseError("expected 'id label'", lineno);
      const std::size_t v = intern(content.substr(0, split));
      verts[v].label = std::string(trim(content.substr(split)));
    }
  }
  return WeightedDigraph(std::move(verts), list);
}

std::string read_text_file(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw Error("cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int got = 0;
  while ((got = gzread(file, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(got));
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw Error("read error in " + path.string());
  return out;
}

WeightedDigraph load_edge_list_file(const std::filesystem::path& edges,
                                    const std::optional<std::filesystem::path>& labels) {
  std::istringstream edge_stream(read_text_file(edges));
  if (!labels) return load_edge_list(edge_stream);
  std::istringstream label_stream(read_text_file(*labels));
  return load_edge_list(edge_stream, &label_stream);
}

std::string digraph_to_json(const WeightedDigraph& g) {
  using nlohmann::json;
  json j;
  j["vertices"] = json::array();
  j["labels"] = json::array();
  j["name_map"] = json::object();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& v = g.vertex(i);
    j["vertices"].push_back({{"id", i}, {"name", v.name}, {"payload", v.payload}});
    if (!v.label.empty()) j["labels"].push_back({{"id", i}, {"label", v.label}});
    j["name_map"][v.name] = i;
  }
  j["edges"] = json::array();
  for (const auto& e : g.edges()) j["edges"].push_back({e.source, e.target, e.weight});
  return j.dump(1);
}

WeightedDigraph digraph_from_json(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("digraph JSON: ") + e.what(), 0);
  }
  try {
    const auto& jv = j.at("vertices");
    std::vector<VertexRecord> verts(jv.size());
    for (const auto& v : jv) {
      const auto id = v.at("id").get<std::size_t>();
      if (id >= verts.size()) throw ParseError("vertex ids must be dense", 0);
      verts[id].name = v.at("name").get<std::string>();
      verts[id].payload = v.value("payload", std::string{});
    }
    if (j.contains("labels")) {
      for (const auto& l : j.at("labels")) verts.at(l.at("id").get<std::size_t>()).label = l.at("label").get<std::string>();
    }
    std::vector<WeightedEdge> edges;
    for (const auto& e : j.at("edges")) {
      edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()});
    }
    return WeightedDigraph(std::move(verts), edges);
  } catch (const json::exception& e) {
    throw ParseError(std::string("digraph JSON: ") + e.what(), 0);
  }
}

// --- structure --------------------------------------------------------------

WeightedDigraph extend(const WeightedDigraph& w) {
  std::vector<Triplet> triplets;
  triplets.reserve(w.num_edges() + w.size());
  for (const auto& e : w.edges()) triplets.emplace_back(static_cast<int>(e.source), static_cast<int>(e.target), e.weight);
  for (std::size_t i = 0; i < w.size(); ++i) triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  return WeightedDigraph(w.vertices(), from_triplets(w.size(), triplets));
}

UndirectedGraph symmetrize(const WeightedDigraph& w, Symmetrization mode) {
  const std::size_t n = w.size();
  const SparseMatrix& a = w.matrix();
  std::vector<Triplet> triplets;

  if (mode == Symmetrization::kUnderlying) {
    // Both (u,v) and (v,u) are computed from the same two operands.
    for (const auto& e : w.edges()) {
      const double sym = (e.weight + w.weight(e.target, e.source)) / 2.0;
      triplets.emplace_back(static_cast<int>(e.source), static_cast<int>(e.target), sym);
      if (w.weight(e.target, e.source) == 0.0) {
        triplets.emplace_back(static_cast<int>(e.target), static_cast<int>(e.source), sym);
      }
    }
    return UndirectedGraph(from_triplets(n, triplets));
  }

  // ES(i,j) = sum_k A(i,k) A(j,k) over rows of A; OS uses rows of A^T.
  // Only i <= j is accumulated and then mirrored, so the result is bitwise symmetric.
  const SparseMatrix rows = (mode == Symmetrization::kES) ? SparseMatrix(a.transpose()) : a;
  std::map<std::pair<int, int>, double> upper;
  for (int k = 0; k < rows.outerSize(); ++k) {
    std::vector<std::pair<int, double>> column;
    for (SparseMatrix::InnerIterator it(rows, k); it; ++it) column.emplace_back(it.col(), it.value());
    for (std::size_t x = 0; x < column.size(); ++x) {
      for (std::size_t y = x; y < column.size(); ++y) {
        upper[{column[x].first, column[y].first}] += column[x].second * column[y].second;
      }
    }
  }
  triplets.reserve(2 * upper.size());
  for (const auto& [ij, value] : upper) {
    triplets.emplace_back(ij.first, ij.second, value);
    if (ij.first != ij.second) triplets.emplace_back(ij.second, ij.first, value);
  }
  return UndirectedGraph(from_triplets(n, triplets));
}

std::vector<std::size_t> weak_component_labels(const WeightedDigraph& w) {
  const std::size_t n = w.size();
  const SparseMatrix t = w.matrix().transpose();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> raw(n, kUnset);
  std::vector<std::vector<std::size_t>> sets;
  for (std::size_t s = 0; s < n; ++s) {
    if (raw[s] != kUnset) continue;
    const std::size_t id = sets.size();
    sets.emplace_back();
    std::vector<int> stack{static_cast<int>(s)};
    raw[s] = id;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      sets.back().push_back(static_cast<std::size_t>(u));
      for (const SparseMatrix* m : {&w.matrix(), &t}) {
        for (SparseMatrix::InnerIterator it(*m, u); it; ++it) {
          if (raw[it.col()] == kUnset) {
            raw[it.col()] = id;
            stack.push_back(it.col());
          }
        }
      }
    }
  }
  // Discovery order already sorts ties by smallest member; stable sort by size.
  std::vector<std::size_t> order(sets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sets[a].size() > sets[b].size(); });
  std::vector<std::size_t> rank(sets.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  for (auto& c : raw) c = rank[c];
  return raw;
}

std::vector<WeakComponent> weak_components(const WeightedDigraph& w) {
  const auto labels = weak_component_labels(w);
  const std::size_t count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<WeakComponent> out(count);
  for (std::size_t v = 0; v < labels.size(); ++v) out[labels[v]].members.push_back(v);
  for (auto& c : out) c.graph = w.induced(c.members);
  return out;
}

bool is_strongly_connected(const WeightedDigraph& w) {
  const std::size_t n = w.size();
  if (n == 0) return true;
  const SparseMatrix t = w.matrix().transpose();
  for (const SparseMatrix* m : {&w.matrix(), &t}) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (SparseMatrix::InnerIterator it(*m, u); it; ++it) {
        if (!seen[it.col()]) {
          seen[it.col()] = 1;
          ++count;
          stack.push_back(it.col());
        }
      }
    }
    if (count != n) return false;
  }
  return true;
}

DistanceMatrix graph_distance(const UndirectedGraph& g, EdgeLength length) {
  const std::size_t n = g.size();
  DistanceMatrix d(n);
  const SparseMatrix& m = g.matrix();
  using Item = std::pair<double, int>;
  for (std::size_t s = 0; s < n; ++s) {
    d(s, s) = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, static_cast<int>(s));
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > d(s, u)) continue;
      for (SparseMatrix::InnerIterator it(m, u); it; ++it) {
        if (it.col() == u) continue;
        const double len = length == EdgeLength::kWeight ? it.value() : 1.0 / it.value();
        const double alt = du + len;
        if (alt < d(s, it.col())) {
          d(s, it.col()) = alt;
          heap.emplace(alt, it.col());
        }
      }
    }
  }
  return d;
}

// --- synthetic inputs -------------------------------------------------------

WeightedDigraph synth_digraph(SynthKind kind, const SynthParams& params, std::uint64_t seed) {
  Rng rng(seed);
  switch (kind) {
    case SynthKind::kPlantedPartition: {
      if (params.block_sizes.empty()) throw InvalidArgument("planted partition needs at least one block");
      if (std::any_of(params.block_sizes.begin(), params.block_sizes.end(), [](auto s) { return s == 0; })) {
        throw InvalidArgument("planted partition blocks must be nonempty");
      }
      if (params.p_in < 0 || params.p_in > 1 || params.p_out < 0 || params.p_out > 1) {
        throw InvalidArgument("edge probabilities must lie in [0,1]");
      }
      std::vector<std::size_t> block;
      for (std::size_t b = 0; b < params.block_sizes.size(); ++b) block.insert(block.end(), params.block_sizes[b], b);
      const std::size_t n = block.size();
      std::vector<VertexRecord> verts(n);
      for (std::size_t i = 0; i < n; ++i) {
        verts[i].name = std::to_string(i);
        verts[i].label = "block" + std::to_string(block[i]);
      }
      std::vector<WeightedEdge> edges;
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
          if (u == v) continue;
          if (rng.bernoulli(block[u] == block[v] ? params.p_in : params.p_out)) edges.push_back({u, v, 1.0});
        }
      }
      return WeightedDigraph(std::move(verts), edges);
    }
    case SynthKind::kRandomSparse: {
      if (params.n == 0) throw InvalidArgument("random sparse digraph needs n > 0");
      if (params.density < 0 || params.density > 1) throw InvalidArgument("density must lie in [0,1]");
      std::vector<WeightedEdge> edges;
      for (std::size_t u = 0; u < params.n; ++u) {
        for (std::size_t v = 0; v < params.n; ++v) {
          if (u != v && rng.bernoulli(params.density)) edges.push_back({u, v, 1.0});
        }
      }
      return WeightedDigraph::with_vertices(params.n, edges);
    }
    case SynthKind::kToy25: {
      constexpr std::size_t n = 25;
      constexpr double p = 0.12;
      for (;;) {
        std::vector<WeightedEdge> edges;
        for (std::size_t u = 0; u < n; ++u) {
          for (std::size_t v = 0; v < n; ++v) {
            if (u != v && rng.bernoulli(p)) edges.push_back({u, v, static_cast<double>(1 + rng.below(4))});
          }
        }
        auto g = WeightedDigraph::with_vertices(n, edges);
        if (is_strongly_connected(g)) return g;
      }
    }
  }
  throw InvalidArgument("unknown synthetic digraph kind");
}

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "planted_partition") return SynthKind::kPlantedPartition;
  if (name == "random_sparse") return SynthKind::kRandomSparse;
  if (name == "toy25") return SynthKind::kToy25;
  throw InvalidArgument("unknown synthetic kind '" + std::string(name) + "'");
}

}  // namespace ditree
