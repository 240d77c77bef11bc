#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Dense>

#include "ditree/clustering.hpp"
#include "ditree/error.hpp"
#include "ditree/random.hpp"

namespace ditree {

namespace detail {
std::vector<std::size_t> labeled_centers(const VertexClasses* labels, Rng& rng);
Hierarchy compose_levels(std::size_t n, const std::vector<std::vector<int>>& fine_to_coarse);
MedoidResult best_medoids(const DistanceMatrix& d, std::size_t k, Rng& rng, std::span<const std::size_t> preferred,
                          std::size_t max_iterations, MedoidInit init, std::size_t restarts);
}  // namespace detail

namespace {

constexpr double kResidualTolerance = 1e-8;

struct NormalizedSpectrum {
  Eigen::VectorXd values;   // ascending eigenvalues of D^-1/2 A D^-1/2
  Eigen::MatrixXd vectors;  // columns
  Eigen::VectorXd inv_sqrt_degree;
};

NormalizedSpectrum normalized_spectrum(const UndirectedGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  NormalizedSpectrum out;
  out.inv_sqrt_degree.resize(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    const double d = g.degree(static_cast<std::size_t>(v));
    if (!(d > 0.0)) throw InvalidArgument("spectral clustering needs every vertex to have positive degree");
    out.inv_sqrt_degree(v) = 1.0 / std::sqrt(d);
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  const SparseMatrix& a = g.matrix();
  for (int u = 0; u < a.outerSize(); ++u) {
    for (SparseMatrix::InnerIterator it(a, u); it; ++it) {
      s(u, it.col()) = out.inv_sqrt_degree(u) * it.value() * out.inv_sqrt_degree(it.col());
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eigendecomposition did not converge", std::numeric_limits<double>::infinity());
  }
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (s * out.vectors.col(i) - out.values(i) * out.vectors.col(i)).norm();
    if (r > kResidualTolerance) throw ConvergenceError("eigenpair residual above tolerance", r);
  }
  // Fix signs so the output does not depend on solver internals.
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    out.vectors.col(i).cwiseAbs().maxCoeff(&arg);
    if (out.vectors(arg, i) < 0.0) out.vectors.col(i) *= -1.0;
  }
  return out;
}

DistanceMatrix euclidean_distances(const std::vector<std::vector<double>>& coords) {
  const std::size_t n = coords.size();
  DistanceMatrix d(n);
  for (std::size_t u = 0; u < n; ++u) {
    d(u, u) = 0.0;
    for (std::size_t v = u + 1; v < n; ++v) {
      double s = 0.0;
      for (std::size_t c = 0; c < coords[u].size(); ++c) {
        const double x = coords[u][c] - coords[v][c];
        s += x * x;
      }
      d(u, v) = d(v, u) = std::sqrt(s);
    }
  }
  return d;
}

}  // namespace

Embedding diffusion_embedding(const UndirectedGraph& g, std::size_t n_eig, double t) {
  const std::size_t n = g.size();
  const auto spec = normalized_spectrum(g);
  const std::size_t m = std::min(n_eig, n);
  Embedding e;
  e.coords.assign(n, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto col = static_cast<Eigen::Index>(n - 1 - i);
    const double lambda = spec.values(col);
    e.eigenvalues.push_back(lambda);
    const double scale = std::pow(lambda, t);
    for (std::size_t v = 0; v < n; ++v) {
      const auto vi = static_cast<Eigen::Index>(v);
      e.coords[v][i] = scale * spec.inv_sqrt_degree(vi) * spec.vectors(vi, col);
    }
  }
  return e;
}

Hierarchy mll_hierarchy(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed, const VertexClasses* labels,
                        const MllOptions& options) {
  k.validate(g.size());
  if (labels != nullptr && labels->size() != g.size()) throw InvalidArgument("label vector size mismatch");
  Rng rng(seed);
  std::vector<std::vector<int>> fine_to_coarse;
  UndirectedGraph a = g;
  for (std::size_t l = k.depth(); l-- > 0;) {
    const Embedding e = diffusion_embedding(a, options.n_eig, options.t);
    const DistanceMatrix d = euclidean_distances(e.coords);
    const auto preferred =
        l + 1 == k.depth() ? detail::labeled_centers(labels, rng) : std::vector<std::size_t>{};
    const auto res =
        detail::best_medoids(d, k.counts[l], rng, preferred, options.max_iterations, options.init, options.restarts);
    fine_to_coarse.push_back(res.assignment);
    a = coarse_grain(a, res.assignment);
  }
  return detail::compose_levels(g.size(), fine_to_coarse);
}

ClusterTree mll_cluster(const UndirectedGraph& g, const LevelSpec& k, std::uint64_t seed, const VertexClasses* labels,
                        const MllOptions& options) {
  std::vector<std::size_t> ids(g.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return tree_from_hierarchy(mll_hierarchy(g, k, seed, labels, options), ids);
}

std::vector<int> mbo_cluster(const UndirectedGraph& g, const VertexClasses& labels, std::size_t n_classes,
                             const MboOptions& options) {
  const std::size_t n = g.size();
  if (labels.size() != n) throw InvalidArgument("label vector size mismatch");
  if (n_classes == 0) throw InvalidArgument("MBO needs at least one class");
  bool any = false;
  for (const int c : labels) {
    if (c >= static_cast<int>(n_classes)) throw InvalidArgument("label id out of range");
    any = any || c >= 0;
  }
  if (!any) throw UnsupportedMode("MBO is semi-supervised only and needs labeled vertices");

  // Lowest Laplacian eigenpairs (L = I - S) are the highest of S.
  const auto spec = normalized_spectrum(g);
  const auto m = static_cast<Eigen::Index>(std::min(options.n_eig, n));
  const auto nn = static_cast<Eigen::Index>(n);
  const auto c = static_cast<Eigen::Index>(n_classes);
  const Eigen::MatrixXd phi = spec.vectors.rightCols(m);
  Eigen::VectorXd lap(m);
  for (Eigen::Index i = 0; i < m; ++i) lap(i) = 1.0 - spec.values(nn - m + i);

  Eigen::MatrixXd u = Eigen::MatrixXd::Constant(nn, c, 1.0 / static_cast<double>(n_classes));
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(nn, c);
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(nn);
  for (Eigen::Index v = 0; v < nn; ++v) {
    const int lv = labels[static_cast<std::size_t>(v)];
    if (lv < 0) continue;
    u.row(v).setZero();
    u(v, lv) = 1.0;
    target(v, lv) = 1.0;
    chi(v) = options.fidelity;
  }

  const std::size_t steps = std::max<std::size_t>(1, options.diffusion_steps);
  const double tau = options.dt / static_cast<double>(steps);
  for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
    Eigen::MatrixXd x = u;
    for (std::size_t s = 0; s < steps; ++s) {
      const Eigen::MatrixXd forcing = chi.asDiagonal() * (x - target);
      Eigen::MatrixXd coef = phi.transpose() * x - tau * (phi.transpose() * forcing);
      for (Eigen::Index i = 0; i < m; ++i) coef.row(i) /= 1.0 + tau * lap(i);
      x = phi * coef;
    }
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(nn, c);
    for (Eigen::Index v = 0; v < nn; ++v) {
      const int lv = labels[static_cast<std::size_t>(v)];
      Eigen::Index arg = 0;
      if (lv >= 0) {
        arg = lv;
      } else {
        x.row(v).maxCoeff(&arg);  // first maximum wins ties
      }
      next(v, arg) = 1.0;
    }
    const double change = (next - u).squaredNorm() / next.squaredNorm();
    u = std::move(next);
    if (change < options.tol) break;
  }
  std::vector<int> out(n);
  for (Eigen::Index v = 0; v < nn; ++v) {
    Eigen::Index arg = 0;
    u.row(v).maxCoeff(&arg);
    out[static_cast<std::size_t>(v)] = static_cast<int>(arg);
  }
  return out;
}

}  // namespace ditree
