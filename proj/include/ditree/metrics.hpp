#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ditree/clustering.hpp"
#include "ditree/digraph.hpp"

namespace ditree {

/// Cluster id per vertex, dense from 0.
using Assignment = std::vector<std::size_t>;

/// Renumbers arbitrary ids densely in order of first appearance.
Assignment densify(const std::vector<std::size_t>& ids);
std::size_t cluster_count(const Assignment& a);

struct DegreeProfile {
  std::vector<double> in;   // weighted
  std::vector<double> out;  // weighted
  double total = 0.0;       // m
};
DegreeProfile degree_profile(const WeightedDigraph& w);

/// (1/m) sum_ij (W_ij - k_i^out k_j^in / m) [C_i = C_j]. Throws InvalidArgument
/// when m = 0 or the assignment does not cover every vertex.
double modularity(const WeightedDigraph& w, const Assignment& clusters);

/// Micro-averaged F-measure: sum_i |C_i| F(C_i) / N with
/// F(C_i) = max_j 2 |C_i n L_j| / (|C_i| + |L_j|). Labels are class ids >= 0.
double f_measure(const Assignment& clusters, const VertexClasses& labels);

/// Every cluster takes its majority label (ties to the smaller label);
/// M(j, k) = sum over clusters labeled j of |C n L_k| / |L_k|. Labels must be
/// dense 0..n-1 with no empty class.
Eigen::MatrixXd confusion_matrix(const Assignment& clusters, const VertexClasses& labels);

/// Level-l clusters of a pair of trees: vertices share a cluster iff they
/// share their level-l node in both trees (the rectangle intersection). The
/// shallower tree is padded so every level exists.
Assignment level_clusters(const ClusterTree& es, const ClusterTree& os, int level);

struct LevelScore {
  int level = 0;
  std::size_t clusters = 0;
  double modularity = 0.0;
  std::optional<double> f_measure;
};

/// Scores levels 1..max depth of the padded pair.
std::vector<LevelScore> align_and_score(const ClusterTree& es, const ClusterTree& os, const WeightedDigraph& w,
                                        const VertexClasses* labels = nullptr);

struct Baseline {
  double mean = 0.0;
  double sd = 0.0;
};
/// Modularity of `trials` uniformly random k-colorings.
Baseline random_coloring_baseline(const WeightedDigraph& w, std::size_t k, std::size_t trials, std::uint64_t seed);

/// Mean and sample standard deviation of one metric at one level over trials.
struct MetricSummary {
  int level = 0;
  std::size_t k = 0;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t trials = 0;
};
std::vector<MetricSummary> summarize_trials(const std::vector<std::vector<LevelScore>>& trials);
/// CSV level,k,metric,mean,std,trials.
std::string metrics_csv(const std::vector<MetricSummary>& rows);

}  // namespace ditree
