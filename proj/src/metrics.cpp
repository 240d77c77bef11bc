#include "ditree/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ditree/error.hpp"
#include "ditree/random.hpp"

namespace ditree {

Assignment densify(const std::vector<std::size_t>& ids) {
  std::map<std::size_t, std::size_t> next;
  Assignment out(ids.size());
  for (std::size_t v = 0; v < ids.size(); ++v) out[v] = next.try_emplace(ids[v], next.size()).first->second;
  return out;
}

std::size_t cluster_count(const Assignment& a) {
  return a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
}

DegreeProfile degree_profile(const WeightedDigraph& w) {
  DegreeProfile d;
  d.in.assign(w.size(), 0.0);
  d.out.assign(w.size(), 0.0);
  for (const auto& e : w.edges()) {
    d.out[e.source] += e.weight;
    d.in[e.target] += e.weight;
    d.total += e.weight;
  }
  return d;
}

double modularity(const WeightedDigraph& w, const Assignment& clusters) {
  if (clusters.size() != w.size()) throw InvalidArgument("modularity: one cluster per vertex required");
  const auto d = degree_profile(w);
  if (d.total <= 0.0) throw InvalidArgument("modularity: the digraph has no weight");
  // sum_ij W_ij [same] - (1/m) sum_c K_out(c) K_in(c)
  const std::size_t k = cluster_count(clusters);
  std::vector<double> kout(k, 0.0);
  std::vector<double> kin(k, 0.0);
  for (std::size_t v = 0; v < w.size(); ++v) {
    kout[clusters[v]] += d.out[v];
    kin[clusters[v]] += d.in[v];
  }
  double inside = 0.0;
  for (const auto& e : w.edges()) {
    if (clusters[e.source] == clusters[e.target]) inside += e.weight;
  }
  double expected = 0.0;
  for (std::size_t c = 0; c < k; ++c) expected += kout[c] * kin[c];
  return (inside - expected / d.total) / d.total;
}

namespace {

// counts[c][l] = |C_c n L_l|.
std::vector<std::vector<std::size_t>> overlap(const Assignment& clusters, const VertexClasses& labels,
                                              std::size_t& n_labels) {
  if (clusters.size() != labels.size()) throw InvalidArgument("one label per vertex required");
  if (clusters.empty()) throw InvalidArgument("empty clustering");
  n_labels = 0;
  for (const int l : labels) {
    if (l < 0) throw InvalidArgument("every vertex must be labeled");
    n_labels = std::max(n_labels, static_cast<std::size_t>(l) + 1);
  }
  std::vector<std::vector<std::size_t>> counts(cluster_count(clusters), std::vector<std::size_t>(n_labels, 0));
  for (std::size_t v = 0; v < clusters.size(); ++v) ++counts[clusters[v]][static_cast<std::size_t>(labels[v])];
  return counts;
}

}  // namespace

double f_measure(const Assignment& clusters, const VertexClasses& labels) {
  std::size_t n_labels = 0;
  const auto counts = overlap(clusters, labels, n_labels);
  std::vector<std::size_t> label_size(n_labels, 0);
  for (const int l : labels) ++label_size[static_cast<std::size_t>(l)];
  double total = 0.0;
  for (const auto& row : counts) {
    std::size_t size = 0;
    for (const auto c : row) size += c;
    if (size == 0) continue;
    double best = 0.0;
    for (std::size_t l = 0; l < n_labels; ++l) {
      if (label_size[l] == 0) continue;
      best = std::max(best, 2.0 * static_cast<double>(row[l]) / static_cast<double>(size + label_size[l]));
    }
    total += static_cast<double>(size) * best;
  }
  return total / static_cast<double>(clusters.size());
}

Eigen::MatrixXd confusion_matrix(const Assignment& clusters, const VertexClasses& labels) {
  std::size_t n_labels = 0;
  const auto counts = overlap(clusters, labels, n_labels);
  std::vector<std::size_t> label_size(n_labels, 0);
  for (const int l : labels) ++label_size[static_cast<std::size_t>(l)];
  for (std::size_t l = 0; l < n_labels; ++l) {
    if (label_size[l] == 0) throw InvalidArgument("label class " + std::to_string(l) + " is empty");
  }
  const auto n = static_cast<Eigen::Index>(n_labels);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& row : counts) {
    std::size_t major = 0;
    for (std::size_t l = 1; l < n_labels; ++l) {
      if (row[l] > row[major]) major = l;
    }
    for (std::size_t l = 0; l < n_labels; ++l) {
      m(static_cast<Eigen::Index>(major), static_cast<Eigen::Index>(l)) +=
          static_cast<double>(row[l]) / static_cast<double>(label_size[l]);
    }
  }
  return m;
}

Assignment level_clusters(const ClusterTree& es, const ClusterTree& os, int level) {
  if (es.num_vertices() != os.num_vertices()) throw InvalidArgument("the trees cover different vertex sets");
  const int depth = std::max(es.depth(), os.depth());
  const auto a = pad_to_depth(es, depth).level_assignment(level);
  const auto b = pad_to_depth(os, depth).level_assignment(level);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> ids;
  Assignment out(a.size());
  for (std::size_t v = 0; v < a.size(); ++v) out[v] = ids.try_emplace({a[v], b[v]}, ids.size()).first->second;
  return out;
}

std::vector<LevelScore> align_and_score(const ClusterTree& es, const ClusterTree& os, const WeightedDigraph& w,
                                        const VertexClasses* labels) {
  std::vector<LevelScore> out;
  const int depth = std::max(es.depth(), os.depth());
  for (int level = 1; level <= depth; ++level) {
    LevelScore s;
    s.level = level;
    const auto c = level_clusters(es, os, level);
    s.clusters = cluster_count(c);
    s.modularity = modularity(w, c);
    if (labels) s.f_measure = f_measure(c, *labels);
    out.push_back(s);
  }
  return out;
}

Baseline random_coloring_baseline(const WeightedDigraph& w, std::size_t k, std::size_t trials, std::uint64_t seed) {
  if (k == 0 || trials < 2) throw InvalidArgument("baseline needs k >= 1 and at least two trials");
  Rng rng(seed);
  std::vector<double> q;
  Assignment c(w.size());
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& x : c) x = rng.below(k);
    q.push_back(modularity(w, c));
  }
  Baseline b;
  for (const double x : q) b.mean += x;
  b.mean /= static_cast<double>(trials);
  for (const double x : q) b.sd += (x - b.mean) * (x - b.mean);
  b.sd = std::sqrt(b.sd / static_cast<double>(trials - 1));
  return b;
}

std::vector<MetricSummary> summarize_trials(const std::vector<std::vector<LevelScore>>& trials) {
  // (level, metric) -> values and cluster counts
  std::map<std::pair<int, std::string>, std::pair<std::vector<double>, std::vector<std::size_t>>> acc;
  for (const auto& trial : trials) {
    for (const auto& s : trial) {
      auto& m = acc[{s.level, "modularity"}];
      m.first.push_back(s.modularity);
      m.second.push_back(s.clusters);
      if (s.f_measure) {
        auto& f = acc[{s.level, "f_measure"}];
        f.first.push_back(*s.f_measure);
        f.second.push_back(s.clusters);
      }
    }
  }
  std::vector<MetricSummary> out;
  for (const auto& [key, values] : acc) {
    MetricSummary r;
    r.level = key.first;
    r.metric = key.second;
    const auto& v = values.first;
    r.trials = v.size();
    // k reports the most frequent cluster count at this level.
    std::map<std::size_t, std::size_t> freq;
    for (const auto c : values.second) ++freq[c];
    r.k = std::max_element(freq.begin(), freq.end(), [](const auto& a, const auto& b) { return a.second < b.second; })->first;
    for (const double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
      for (const double x : v) r.sd += (x - r.mean) * (x - r.mean);
      r.sd = std::sqrt(r.sd / static_cast<double>(v.size() - 1));
    }
    out.push_back(r);
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricSummary>& rows) {
  std::ostringstream out;
  out << "level,k,metric,mean,std,trials\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%zu,%s,%.17g,%.17g,%zu\n", r.level, r.k, r.metric.c_str(), r.mean, r.sd, r.trials);
    out << buf;
  }
  return out.str();
}

}  // namespace ditree
