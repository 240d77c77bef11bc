#include <algorithm>
#include <map>

#include "ditree/clustering.hpp"
#include "ditree/error.hpp"
#include "ditree/random.hpp"

namespace ditree {

namespace {

ClusterTree flat_tree(const std::vector<std::size_t>& members) {
  TreeBuilder b;
  const NodeId root = b.add_root(members);
  for (const auto v : members) b.add_child(root, {v});
  return std::move(b).build();
}

// Upper levels for MBO: NHC on the graph coarse-grained by the MBO classes.
Hierarchy mbo_hierarchy(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed, const VertexClasses& labels,
                        const TwtOptions& options) {
  const auto raw = mbo_cluster(g, labels, k.counts.back(), options.mbo);
  std::map<int, int> dense;
  std::vector<int> fine(raw.size());
  for (std::size_t v = 0; v < raw.size(); ++v) {
    const auto [it, inserted] = dense.try_emplace(raw[v], static_cast<int>(dense.size()));
    fine[v] = it->second;
  }
  LevelSpec upper;
  for (std::size_t l = 0; l + 1 < k.depth(); ++l) {
    if (k.counts[l] < dense.size()) upper.counts.push_back(k.counts[l]);
  }
  Hierarchy h;
  if (!upper.counts.empty()) {
    const Hierarchy coarse = nhc_hierarchy(coarse_grain(g, fine), upper, mix_seed(seed, 1), nullptr, options.nhc);
    for (const auto& level : coarse.assignments) {
      std::vector<int> a(fine.size());
      for (std::size_t v = 0; v < fine.size(); ++v) a[v] = level[fine[v]];
      h.assignments.push_back(std::move(a));
    }
  }
  h.assignments.push_back(std::move(fine));
  return h;
}

ClusterTree component_tree(const WeakComponent& comp, Symmetrization mode, std::uint64_t seed,
                           const TwtOptions& options, const VertexClasses* labels) {
  const std::size_t n = comp.members.size();
  if (n < options.tiny_component) return flat_tree(comp.members);
  LevelSpec k;
  for (const auto c : options.levels.counts) {
    if (c < n) k.counts.push_back(c);
  }
  if (k.counts.empty()) return flat_tree(comp.members);

  VertexClasses local;
  bool any_label = false;
  if (labels != nullptr) {
    local.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      local[i] = (*labels)[comp.members[i]];
      any_label = any_label || local[i] >= 0;
    }
  }
  const VertexClasses* local_labels = any_label ? &local : nullptr;
  const UndirectedGraph g = symmetrize(comp.graph, mode);

  Hierarchy h;
  switch (options.algorithm) {
    case Algorithm::kNHC:
      h = nhc_hierarchy(g, k, seed, local_labels, options.nhc);
      break;
    case Algorithm::kMLL:
      h = mll_hierarchy(g, k, seed, local_labels, options.mll);
      break;
    case Algorithm::kMBO:
      if (labels == nullptr) throw UnsupportedMode("MBO is semi-supervised only and needs labeled vertices");
      // A component with no labeled vertex falls back to NHC.
      h = any_label ? mbo_hierarchy(g, k, seed, local, options) : nhc_hierarchy(g, k, seed, nullptr, options.nhc);
      break;
  }
  return tree_from_hierarchy(h, comp.members);
}

ClusterTree build_tree(const std::vector<WeakComponent>& comps, std::size_t n, Symmetrization mode,
                       const TwtOptions& options, const VertexClasses* labels) {
  const std::uint64_t side = mode == Symmetrization::kES ? 0 : 1;
  if (comps.size() == 1) return component_tree(comps[0], mode, mix_seed(options.seed, side), options, labels);
  TreeBuilder b;
  std::vector<std::size_t> all(n);
  for (std::size_t v = 0; v < n; ++v) all[v] = v;
  const NodeId root = b.add_root(std::move(all));
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const NodeId node = b.add_child(root, comps[c].members);
    b.graft(node, component_tree(comps[c], mode, mix_seed(options.seed, 2 * c + side), options, labels));
  }
  return std::move(b).build();
}

}  // namespace

TwinTrees twt(const WeightedDigraph& w, const TwtOptions& options, const VertexClasses* labels) {
  if (w.size() == 0) throw InvalidArgument("cannot cluster an empty digraph");
  if (labels != nullptr && labels->size() != w.size()) throw InvalidArgument("label vector size mismatch");
  const auto comps = weak_components(extend(w));
  return {build_tree(comps, w.size(), Symmetrization::kES, options, labels),
          build_tree(comps, w.size(), Symmetrization::kOS, options, labels)};
}

}  // namespace ditree
