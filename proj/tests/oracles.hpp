// Independent reference computations used only by the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

#include "ditree/metrics.hpp"

namespace oracle {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// Sets of vertices (each ascending), sorted by their smallest member.
inline std::vector<std::vector<std::size_t>> components(std::size_t n,
                                                        const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  UnionFind uf(n);
  for (const auto& [u, v] : edges) uf.unite(u, v);
  std::vector<std::vector<std::size_t>> by_root(n);
  for (std::size_t v = 0; v < n; ++v) by_root[uf.find(v)].push_back(v);
  std::vector<std::vector<std::size_t>> out;
  for (auto& c : by_root) {
    if (!c.empty()) out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Dense weights, 0 = no edge; diagonal ignored.
inline std::vector<std::vector<double>> floyd_warshall(const std::vector<std::vector<double>>& w) {
  const std::size_t n = w.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && w[i][j] > 0.0) d[i][j] = w[i][j];
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }
  return d;
}

// Two-sided 99% normal interval for a Binomial(n, p) count.
inline std::pair<double, double> binomial_interval99(double n, double p) {
  const double mean = n * p;
  const double sd = std::sqrt(n * p * (1.0 - p));
  return {mean - 2.5758 * sd, mean + 2.5758 * sd};
}

// Least-squares coefficients of f in the columns of `b` with respect to the
// diagonal weights `mass`, by the normal equations.
inline Eigen::VectorXd gram_solve(const Eigen::MatrixXd& b, const Eigen::VectorXd& f, const Eigen::VectorXd& mass) {
  const Eigen::MatrixXd g = b.transpose() * mass.asDiagonal() * b;
  const Eigen::VectorXd rhs = b.transpose() * mass.asDiagonal() * f;
  return g.ldlt().solve(rhs);
}

// Discrete Chebyshev error min_c max_i |f_i - (Bc)_i| by enumerating
// circuits: for every point subset S whose rows of B have a one-dimensional
// left null space spanned by lambda, |lambda.f_S| / |lambda|_1 is a lower
// bound, and the maximum over such subsets equals the optimum. Exponential;
// meant for a handful of points.
inline double chebyshev_by_circuits(const Eigen::MatrixXd& b, const Eigen::VectorXd& f) {
  const int m = static_cast<int>(b.rows());
  const int d = static_cast<int>(b.cols());
  double best = 0.0;
  std::vector<int> idx;
  // Enumerate subsets of size 1..d+1 via bitmask (m is small).
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size > d + 1) continue;
    idx.clear();
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    Eigen::MatrixXd bs(size, d);
    Eigen::VectorXd fs(size);
    for (int r = 0; r < size; ++r) {
      bs.row(r) = b.row(idx[r]);
      fs(r) = f(idx[r]);
    }
    // Left null space of bs: null space of bs^T.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bs.transpose());
    lu.setThreshold(1e-10);
    const Eigen::MatrixXd ker = lu.kernel();
    if (ker.cols() != 1 || ker.norm() == 0.0) continue;
    const Eigen::VectorXd lambda = ker.col(0);
    // Circuits only: every coordinate of lambda must be nonzero.
    if ((lambda.cwiseAbs().array() < 1e-12 * lambda.cwiseAbs().maxCoeff()).any()) continue;
    best = std::max(best, std::abs(lambda.dot(fs)) / lambda.lpNorm<1>());
  }
  return best;
}

// The same optimum by enumerating point subsets of size at most d + 1
// directly; polynomial in the point count for a fixed small d.
inline double chebyshev_by_subsets(const Eigen::MatrixXd& b, const Eigen::VectorXd& f) {
  const int m = static_cast<int>(b.rows());
  const int d = static_cast<int>(b.cols());
  double best = 0.0;
  std::vector<int> idx;
  auto visit = [&]() {
    const int size = static_cast<int>(idx.size());
    Eigen::MatrixXd bs(size, d);
    Eigen::VectorXd fs(size);
    for (int r = 0; r < size; ++r) {
      bs.row(r) = b.row(idx[r]);
      fs(r) = f(idx[r]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bs.transpose());
    lu.setThreshold(1e-10);
    const Eigen::MatrixXd ker = lu.kernel();
    if (ker.cols() != 1 || ker.norm() == 0.0) return;
    const Eigen::VectorXd lambda = ker.col(0);
    if ((lambda.cwiseAbs().array() < 1e-12 * lambda.cwiseAbs().maxCoeff()).any()) return;
    best = std::max(best, std::abs(lambda.dot(fs)) / lambda.lpNorm<1>());
  };
  std::function<void(int)> rec = [&](int start) {
    if (!idx.empty()) visit();
    if (static_cast<int>(idx.size()) == d + 1) return;
    for (int i = start; i < m; ++i) {
      idx.push_back(i);
      rec(i + 1);
      idx.pop_back();
    }
  };
  rec(0);
  return best;
}

// Straight evaluation of the double sum over vertex pairs.
inline double modularity_oracle(const ditree::WeightedDigraph& w, const ditree::Assignment& c) {
  const std::size_t n = w.size();
  std::vector<double> kin(n, 0.0);
  std::vector<double> kout(n, 0.0);
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      kout[i] += w.weight(i, j);
      kin[j] += w.weight(i, j);
      m += w.weight(i, j);
    }
  }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (c[i] == c[j]) q += w.weight(i, j) - kout[i] * kin[j] / m;
    }
  }
  return q / m;
}

inline double f_measure_oracle(const ditree::Assignment& c, const ditree::VertexClasses& l) {
  const std::size_t n = c.size();
  const std::size_t nc = *std::max_element(c.begin(), c.end()) + 1;
  const int nl = *std::max_element(l.begin(), l.end()) + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    double size = 0.0;
    for (std::size_t v = 0; v < n; ++v) size += c[v] == i;
    double best = 0.0;
    for (int j = 0; j < nl; ++j) {
      double both = 0.0;
      double lj = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        both += c[v] == i && l[v] == j;
        lj += l[v] == j;
      }
      best = std::max(best, 2.0 * both / (size + lj));
    }
    total += size * best;
  }
  return total / static_cast<double>(n);
}

inline Eigen::MatrixXd confusion_oracle(const ditree::Assignment& c, const ditree::VertexClasses& l) {
  const std::size_t n = c.size();
  const std::size_t nc = *std::max_element(c.begin(), c.end()) + 1;
  const int nl = *std::max_element(l.begin(), l.end()) + 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nl, nl);
  for (std::size_t i = 0; i < nc; ++i) {
    int major = 0;
    double major_count = -1.0;
    for (int j = 0; j < nl; ++j) {
      double cnt = 0.0;
      for (std::size_t v = 0; v < n; ++v) cnt += c[v] == i && l[v] == j;
      if (cnt > major_count) {
        major = j;
        major_count = cnt;
      }
    }
    for (int k = 0; k < nl; ++k) {
      double both = 0.0;
      double lk = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        both += c[v] == i && l[v] == k;
        lk += l[v] == k;
      }
      m(major, k) += both / lk;
    }
  }
  return m;
}

// The same double sum in exact rational arithmetic.
inline mpq_class modularity_exact(const ditree::WeightedDigraph& w, const ditree::Assignment& c) {
  const std::size_t n = w.size();
  auto q = [](double x) { return mpq_class(x); };
  std::vector<mpq_class> kin(n, 0), kout(n, 0);
  mpq_class m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      kout[i] += q(w.weight(i, j));
      kin[j] += q(w.weight(i, j));
      m += q(w.weight(i, j));
    }
  }
  mpq_class sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (c[i] == c[j]) sum += q(w.weight(i, j)) - kout[i] * kin[j] / m;
    }
  }
  sum /= m;
  sum.canonicalize();
  return sum;
}

}  // namespace oracle
