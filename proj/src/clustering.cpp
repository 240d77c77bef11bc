#include <algorithm>
#include <limits>
#include <map>

#include "ditree/clustering.hpp"
#include "ditree/error.hpp"
#include "ditree/random.hpp"

namespace ditree {

namespace {

// Saturating sum so unreachable pairs keep an infinite cost.
double cluster_cost(const DistanceMatrix& d, std::size_t center, const std::vector<std::size_t>& members) {
  double s = 0.0;
  for (const auto v : members) s += d(center, v);
  return s;
}

// D^2 seeding; points unreachable from every chosen center are drawn first.
void add_plus_plus_centers(const DistanceMatrix& d, std::size_t k, Rng& rng, std::vector<std::size_t>& centers,
                           std::vector<char>& is_center) {
  const std::size_t n = d.size();
  auto take = [&](std::size_t v) {
    is_center[v] = 1;
    centers.push_back(v);
  };
  if (centers.empty()) take(rng.below(n));
  std::vector<double> nearest(n, DistanceMatrix::kUnreachable);
  for (const auto c : centers) {
    for (std::size_t v = 0; v < n; ++v) nearest[v] = std::min(nearest[v], d(c, v));
  }
  while (centers.size() < k) {
    std::vector<std::size_t> unreachable;
    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (is_center[v]) continue;
      if (!DistanceMatrix::reachable(nearest[v])) unreachable.push_back(v);
      total += nearest[v] * nearest[v];
    }
    std::size_t pick = n;
    if (!unreachable.empty()) {
      pick = unreachable[rng.below(unreachable.size())];
    } else if (total > 0.0) {
      double x = rng.uniform() * total;
      for (std::size_t v = 0; v < n; ++v) {
        if (is_center[v]) continue;
        pick = v;
        x -= nearest[v] * nearest[v];
        if (x < 0.0) break;
      }
    } else {
      // Every remaining point coincides with a center; fall back to uniform.
      std::vector<std::size_t> rest;
      for (std::size_t v = 0; v < n; ++v) {
        if (!is_center[v]) rest.push_back(v);
      }
      pick = rest[rng.below(rest.size())];
    }
    take(pick);
    for (std::size_t v = 0; v < n; ++v) nearest[v] = std::min(nearest[v], d(pick, v));
  }
}

}  // namespace

MedoidResult k_medoids(const DistanceMatrix& d, std::size_t k, Rng& rng, std::span<const std::size_t> preferred,
                       std::size_t max_iterations, MedoidInit init) {
  const std::size_t n = d.size();
  if (k == 0 || k > n) {
    throw InvalidArgument("cannot form " + std::to_string(k) + " clusters from " + std::to_string(n) + " points");
  }
  MedoidResult r;
  std::vector<char> is_center(n, 0);
  for (const auto p : preferred) {
    if (r.centers.size() == k) break;
    if (p < n && !is_center[p]) {
      is_center[p] = 1;
      r.centers.push_back(p);
    }
  }
  if (init == MedoidInit::kUniform) {
    std::vector<std::size_t> pool;
    for (std::size_t v = 0; v < n; ++v) {
      if (!is_center[v]) pool.push_back(v);
    }
    rng.shuffle(pool);
    for (std::size_t i = 0; r.centers.size() < k; ++i) {
      is_center[pool[i]] = 1;
      r.centers.push_back(pool[i]);
    }
  } else {
    add_plus_plus_centers(d, k, rng, r.centers, is_center);
  }

  r.assignment.assign(n, 0);
  std::vector<std::vector<std::size_t>> members(k);
  for (r.iterations = 0; r.iterations < max_iterations;) {
    ++r.iterations;
    // Assignment: nearest center, ties to the lowest center vertex id.
    for (auto& m : members) m.clear();
    for (std::size_t v = 0; v < n; ++v) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < k; ++j) {
        const double dj = d(r.centers[j], v);
        const double db = d(r.centers[best], v);
        if (dj < db || (dj == db && r.centers[j] < r.centers[best])) best = j;
      }
      r.assignment[v] = static_cast<int>(best);
      members[best].push_back(v);
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (!members[j].empty()) continue;
      // Re-seed with the point farthest from its assigned center.
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t v = 0; v < n; ++v) {
        if (is_center[v]) continue;
        const double dv = d(r.centers[r.assignment[v]], v);
        if (dv > far_d) {
          far_d = dv;
          far = v;
        }
      }
      if (far == n) throw InvalidArgument("k-medoids ran out of points while re-seeding an empty cluster");
      auto& old = members[r.assignment[far]];
      old.erase(std::find(old.begin(), old.end(), far));
      is_center[r.centers[j]] = 0;
      r.centers[j] = far;
      is_center[far] = 1;
      r.assignment[far] = static_cast<int>(j);
      members[j].push_back(far);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += cluster_cost(d, r.centers[j], members[j]);
    r.costs.push_back(total);

    // Medoid update; a center only moves on a strict improvement.
    bool moved = false;
    for (std::size_t j = 0; j < k; ++j) {
      double best_cost = cluster_cost(d, r.centers[j], members[j]);
      std::size_t best = r.centers[j];
      for (const auto u : members[j]) {
        const double c = cluster_cost(d, u, members[j]);
        if (c < best_cost || (c == best_cost && u < best && best != r.centers[j])) {
          best_cost = c;
          best = u;
        }
      }
      if (best != r.centers[j]) {
        is_center[r.centers[j]] = 0;
        is_center[best] = 1;
        r.centers[j] = best;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return r;
}

UndirectedGraph coarse_grain(const UndirectedGraph& g, std::span<const int> partition) {
  if (partition.size() != g.size()) throw InvalidArgument("partition must cover every vertex");
  int k = 0;
  for (const int c : partition) {
    if (c < 0) throw InvalidArgument("partition ids must be nonnegative");
    k = std::max(k, c + 1);
  }
  std::map<std::pair<int, int>, double> upper;
  const SparseMatrix& m = g.matrix();
  for (int u = 0; u < m.outerSize(); ++u) {
    for (SparseMatrix::InnerIterator it(m, u); it; ++it) {
      const int v = it.col();
      if (v < u) continue;
      const int cu = partition[u];
      const int cv = partition[v];
      const auto key = std::minmax(cu, cv);
      // Both (u,v) and (v,u) land in a diagonal block.
      const double mult = (u != v && cu == cv) ? 2.0 : 1.0;
      upper[{key.first, key.second}] += mult * it.value();
    }
  }
  std::vector<Eigen::Triplet<double, int>> triplets;
  for (const auto& [ij, w] : upper) {
    triplets.emplace_back(ij.first, ij.second, w);
    if (ij.first != ij.second) triplets.emplace_back(ij.second, ij.first, w);
  }
  SparseMatrix a(k, k);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return UndirectedGraph(std::move(a));
}

namespace detail {

// One labeled vertex per class (random within the class), classes in random order.
std::vector<std::size_t> labeled_centers(const VertexClasses* labels, Rng& rng) {
  std::vector<std::size_t> out;
  if (labels == nullptr) return out;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t v = 0; v < labels->size(); ++v) {
    if ((*labels)[v] >= 0) by_class[(*labels)[v]].push_back(v);
  }
  for (auto& [cls, verts] : by_class) out.push_back(verts[rng.below(verts.size())]);
  rng.shuffle(out);
  return out;
}

// Lowest final cost over `restarts` runs; the earliest run wins ties.
MedoidResult best_medoids(const DistanceMatrix& d, std::size_t k, Rng& rng, std::span<const std::size_t> preferred,
                          std::size_t max_iterations, MedoidInit init, std::size_t restarts) {
  MedoidResult best;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    auto res = k_medoids(d, k, rng, preferred, max_iterations, init);
    if (r == 0 || res.costs.back() < best.costs.back()) best = std::move(res);
  }
  return best;
}

// Composes per-level medoid assignments (finest first) into vertex-level
// assignments (coarsest first).
Hierarchy compose_levels(std::size_t n, const std::vector<std::vector<int>>& fine_to_coarse) {
  Hierarchy h;
  std::vector<int> cur(n);
  for (std::size_t v = 0; v < n; ++v) cur[v] = static_cast<int>(v);
  for (const auto& level : fine_to_coarse) {
    for (auto& c : cur) c = level[c];
    h.assignments.push_back(cur);
  }
  std::reverse(h.assignments.begin(), h.assignments.end());
  return h;
}

}  // namespace detail

Hierarchy nhc_hierarchy(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed, const VertexClasses* labels,
                        const NhcOptions& options) {
  k.validate(g.size());
  if (labels != nullptr && labels->size() != g.size()) throw InvalidArgument("label vector size mismatch");
  Rng rng(seed);
  std::vector<std::vector<int>> fine_to_coarse;
  UndirectedGraph a = g;
  for (std::size_t l = k.depth(); l-- > 0;) {
    const DistanceMatrix d = graph_distance(a, options.length);
    const auto preferred =
        l + 1 == k.depth() ? detail::labeled_centers(labels, rng) : std::vector<std::size_t>{};
    const auto res =
        detail::best_medoids(d, k.counts[l], rng, preferred, options.max_iterations, options.init, options.restarts);
    fine_to_coarse.push_back(res.assignment);
    a = coarse_grain(a, res.assignment);
  }
  return detail::compose_levels(g.size(), fine_to_coarse);
}

ClusterTree nhc_cluster(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed, const VertexClasses* labels,
                        const NhcOptions& options) {
  std::vector<std::size_t> ids(g.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return tree_from_hierarchy(nhc_hierarchy(g, k, seed, labels, options), ids);
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "nhc" || name == "NHC") return Algorithm::kNHC;
  if (name == "mll" || name == "MLL") return Algorithm::kMLL;
  if (name == "mbo" || name == "MBO") return Algorithm::kMBO;
  throw InvalidArgument("unknown clustering algorithm '" + std::string(name) + "'");
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kNHC: return "nhc";
    case Algorithm::kMLL: return "mll";
    case Algorithm::kMBO: return "mbo";
  }
  return "?";
}

}  // namespace ditree
