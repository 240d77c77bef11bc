#include "ditree/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "ditree/error.hpp"

namespace ditree {

// --- grid -------------------------------------------------------------------

GridSet::GridSet(const Filtration& es, const Filtration& os, bool normalize)
    : es_(es), os_(os), normalized_(normalize) {
  if (es.num_leaves() != os.num_leaves()) throw InvalidArgument("the two filtrations cover different vertex sets");
  std::vector<std::size_t> vertices;
  for (std::size_t i = 0; i < es.num_leaves(); ++i) vertices.push_back(es.leaf_vertex(i));
  std::sort(vertices.begin(), vertices.end());
  const auto& ex = es.leaf_edges();
  const auto& oy = os.leaf_edges();
  raw_total_ = 0;
  for (const auto v : vertices) {
    GridPoint p;
    p.vertex = v;
    p.i = es.leaf_position(v);
    p.j = os.leaf_position(v);  // throws for a vertex missing from the OS tree
    p.x0 = ex[p.i].get_d();
    p.x1 = ex[p.i + 1].get_d();
    p.y0 = oy[p.j].get_d();
    p.y1 = oy[p.j + 1].get_d();
    p.mass_exact = (ex[p.i + 1] - ex[p.i]) * (oy[p.j + 1] - oy[p.j]);
    raw_total_ += p.mass_exact;
    index_of_vertex_[v] = points_.size();
    points_.push_back(std::move(p));
  }
  for (auto& p : points_) {
    if (normalize) {
      p.mass_exact /= raw_total_;
      p.mass_exact.canonicalize();
    }
    p.mass = p.mass_exact.get_d();
  }
}

bool GridSet::stripes_covered() const {
  std::vector<char> rows(es_.num_leaves(), 0);
  std::vector<char> cols(os_.num_leaves(), 0);
  for (const auto& p : points_) {
    rows[p.i] = 1;
    cols[p.j] = 1;
  }
  return std::all_of(rows.begin(), rows.end(), [](char c) { return c; }) &&
         std::all_of(cols.begin(), cols.end(), [](char c) { return c; });
}

std::size_t GridSet::index_of(std::size_t vertex) const {
  const auto it = index_of_vertex_.find(vertex);
  if (it == index_of_vertex_.end()) throw InvalidArgument("vertex " + std::to_string(vertex) + " is not on the grid");
  return it->second;
}

std::string GridSet::to_csv() const {
  std::ostringstream out;
  out << "vertex,x0,x1,y0,y1,mass\n";
  char buf[192];
  for (const auto& p : points_) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.vertex, p.x0, p.x1, p.y0, p.y1, p.mass);
    out << buf;
  }
  return out.str();
}

GridSet build_grid(const Filtration& es, const Filtration& os, bool normalize) { return GridSet(es, os, normalize); }

// --- frequencies ------------------------------------------------------------

namespace {

int ceil_log2(std::size_t x) {
  int j = 0;
  std::size_t p = 1;
  while (p < x) {
    p <<= 1;
    ++j;
  }
  return j;
}

}  // namespace

int shell(const Freq& k) { return std::max(ceil_log2(k.k1 + 1), ceil_log2(k.k2 + 1)); }

FrequencySet::FrequencySet(std::vector<Freq> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
}

bool FrequencySet::contains(const Freq& k) const { return std::binary_search(indices_.begin(), indices_.end(), k); }

std::optional<std::size_t> FrequencySet::position(const Freq& k) const {
  const auto it = std::lower_bound(indices_.begin(), indices_.end(), k);
  if (it == indices_.end() || *it != k) return std::nullopt;
  return static_cast<std::size_t>(it - indices_.begin());
}

int FrequencySet::max_shell() const {
  int s = 0;
  for (const auto& k : indices_) s = std::max(s, shell(k));
  return s;
}

FrequencySet FrequencySet::enlarged() const {
  std::vector<Freq> out;
  for (const auto& k : indices_) {
    for (std::size_t a = k.k1 < 2 ? 0 : k.k1 - 2; a <= k.k1 + 2; ++a) {
      for (std::size_t b = k.k2 < 2 ? 0 : k.k2 - 2; b <= k.k2 + 2; ++b) out.push_back({a, b});
    }
  }
  return FrequencySet(std::move(out));
}

namespace {

// For every leaf, the basis indices whose function is nonzero there.
std::vector<std::vector<std::size_t>> supports_by_leaf(const GlobalBasis& b) {
  std::vector<std::vector<std::size_t>> out(b.num_leaves());
  for (std::size_t n = 0; n < b.size(); ++n) {
    const auto& a = b.atom(n);
    for (std::size_t i = a.lo; i < a.hi; ++i) out[i].push_back(n);
  }
  return out;
}

}  // namespace

FrequencySet compute_omega(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis) {
  const auto s1 = supports_by_leaf(es_basis);
  const auto s2 = supports_by_leaf(os_basis);
  std::vector<Freq> all;
  for (const auto& p : grid.points()) {
    for (const auto k1 : s1.at(p.i)) {
      for (const auto k2 : s2.at(p.j)) all.push_back({k1, k2});
    }
  }
  return FrequencySet(std::move(all));
}

Eigen::VectorXd tensor_values(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                              const Freq& k) {
  const double s = std::sqrt(es_basis.aleph(k.k1) * os_basis.aleph(k.k2));
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto& pt = grid.points()[p];
    v(static_cast<Eigen::Index>(p)) = s * es_basis.value(k.k1, pt.i) * os_basis.value(k.k2, pt.j);
  }
  return v;
}

// --- tensor bases -----------------------------------------------------------

bool shell_order(const Freq& a, const Freq& b) {
  const int sa = shell(a);
  const int sb = shell(b);
  if (sa != sb) return sa < sb;
  if (a.k1 + a.k2 != b.k1 + b.k2) return a.k1 + a.k2 < b.k1 + b.k2;
  return a.k1 < b.k1;
}

namespace {

Eigen::VectorXd masses(const GridSet& grid) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t p = 0; p < grid.size(); ++p) m(static_cast<Eigen::Index>(p)) = grid.points()[p].mass;
  return m;
}

std::vector<Freq> ordered(const FrequencySet& omega) {
  std::vector<Freq> k = omega.indices();
  std::sort(k.begin(), k.end(), shell_order);
  return k;
}

}  // namespace

TensorBasis idealized_basis(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                            const FrequencySet& omega) {
  TensorBasis b;
  b.mode_ = BasisMode::kIdealized;
  b.index_ = ordered(omega);
  b.mass_ = masses(grid);
  b.q_.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(b.index_.size()));
  for (std::size_t c = 0; c < b.index_.size(); ++c) {
    b.q_.col(static_cast<Eigen::Index>(c)) = tensor_values(grid, es_basis, os_basis, b.index_[c]);
  }
  return b;
}

TensorBasis gram_orthonormalize(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                                const FrequencySet& omega, double drop_tolerance) {
  TensorBasis b;
  b.mode_ = BasisMode::kExact;
  b.mass_ = masses(grid);
  const auto n = static_cast<Eigen::Index>(grid.size());
  b.q_.resize(n, 0);
  std::vector<Eigen::VectorXd> kept;
  auto dot = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return (x.array() * y.array() * b.mass_.array()).sum(); };
  for (const auto& k : ordered(omega)) {
    if (static_cast<Eigen::Index>(kept.size()) == n) {
      b.dropped_.push_back(k);  // the span is already everything
      continue;
    }
    Eigen::VectorXd v = tensor_values(grid, es_basis, os_basis, k);
    const double norm0 = std::sqrt(dot(v, v));
    // Two modified Gram-Schmidt passes keep the result orthonormal to rounding.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : kept) v -= dot(q, v) * q;
    }
    const double norm = std::sqrt(dot(v, v));
    if (!(norm > drop_tolerance * norm0)) {
      b.dropped_.push_back(k);
      continue;
    }
    kept.push_back(v / norm);
    b.index_.push_back(k);
  }
  b.q_.resize(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) b.q_.col(static_cast<Eigen::Index>(c)) = kept[c];
  return b;
}

double TensorBasis::orthogonality_defect() const {
  const Eigen::MatrixXd g = q_.transpose() * mass_.asDiagonal() * q_;
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

std::vector<double> TensorBasis::analyze(const GridValues& f) const {
  if (f.size() != static_cast<std::size_t>(q_.rows())) throw InvalidArgument("one value per grid point required");
  const Eigen::VectorXd weighted = Eigen::Map<const Eigen::VectorXd>(f.data(), q_.rows()).cwiseProduct(mass_);
  const Eigen::VectorXd c = q_.transpose() * weighted;
  return {c.data(), c.data() + c.size()};
}

GridValues TensorBasis::synthesize(const std::vector<double>& coefficients) const {
  if (coefficients.size() != index_.size()) throw InvalidArgument("one coefficient per basis function required");
  const Eigen::VectorXd v = q_ * Eigen::Map<const Eigen::VectorXd>(coefficients.data(), q_.cols());
  return {v.data(), v.data() + v.size()};
}

GridValues tensor_partial_sum(const TensorBasis& basis, const std::vector<double>& coefficients, const Freq& m) {
  std::vector<double> c = coefficients;
  for (std::size_t p = 0; p < c.size(); ++p) {
    const auto& k = basis.index()[p];
    if (k.k1 > m.k1 || k.k2 > m.k2) c[p] = 0.0;
  }
  return basis.synthesize(c);
}

// --- bi-sequences -----------------------------------------------------------

namespace {

double at(const BiSequence& h, Eigen::Index i, Eigen::Index j) {
  return i < h.rows() && j < h.cols() ? h(i, j) : 0.0;
}

}  // namespace

double variation_2d(const BiSequence& h) {
  if (h.size() == 0) return 0.0;
  const Eigen::Index r = h.rows();
  const Eigen::Index c = h.cols();
  double rows = 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) s += std::abs(at(h, i, j + 1) - h(i, j));
    rows = std::max(rows, s);
  }
  double cols = 0.0;
  for (Eigen::Index j = 0; j < c; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r; ++i) s += std::abs(at(h, i + 1, j) - h(i, j));
    cols = std::max(cols, s);
  }
  return h.cwiseAbs().maxCoeff() + rows + cols + mixed_difference(h).cwiseAbs().sum();
}

BiSequence mixed_difference(const BiSequence& h) {
  BiSequence d(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      d(i, j) = at(h, i + 1, j + 1) - at(h, i + 1, j) - at(h, i, j + 1) + h(i, j);
    }
  }
  return d;
}

GridValues filtered_sum_2d(const TensorBasis& basis, const BiSequence& h, const GridValues& f) {
  auto c = basis.analyze(f);
  for (std::size_t p = 0; p < c.size(); ++p) {
    const auto& k = basis.index()[p];
    c[p] *= at(h, static_cast<Eigen::Index>(k.k1), static_cast<Eigen::Index>(k.k2));
  }
  return basis.synthesize(c);
}

GridValues filtered_sum_2d_by_parts(const TensorBasis& basis, const BiSequence& h, const GridValues& f) {
  const auto c = basis.analyze(f);
  const Eigen::Index r = h.rows();
  const Eigen::Index cols = h.cols();
  const Eigen::Index n = basis.matrix().rows();
  // term(k1, k2) = f_hat(k) e_k, then 2-D prefix sums give s_k.
  std::vector<Eigen::VectorXd> s(static_cast<std::size_t>(r * cols), Eigen::VectorXd::Zero(n));
  auto cell = [&](Eigen::Index i, Eigen::Index j) -> Eigen::VectorXd& { return s[static_cast<std::size_t>(i * cols + j)]; };
  for (std::size_t p = 0; p < c.size(); ++p) {
    const auto& k = basis.index()[p];
    const auto i = static_cast<Eigen::Index>(k.k1);
    const auto j = static_cast<Eigen::Index>(k.k2);
    if (i < r && j < cols) cell(i, j) += c[p] * basis.matrix().col(static_cast<Eigen::Index>(p));
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (i > 0) cell(i, j) += cell(i - 1, j);
      if (j > 0) cell(i, j) += cell(i, j - 1);
      if (i > 0 && j > 0) cell(i, j) -= cell(i - 1, j - 1);
    }
  }
  const BiSequence d = mixed_difference(h);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (d(i, j) != 0.0) out += d(i, j) * cell(i, j);
    }
  }
  return {out.data(), out.data() + out.size()};
}

// --- partitions of unity ----------------------------------------------------

double PartitionOfUnity::weight(std::size_t j, const Freq& k) const {
  if (j >= g.size()) return 0.0;
  const auto p = omega.position(k);
  return p ? g[j][*p] : 0.0;
}

double PartitionOfUnity::cumulative(int n, const Freq& k) const {
  if (n < 0) return 0.0;
  const auto p = omega.position(k);
  if (!p) return dyadic_shells && shell(k) <= n ? 1.0 : 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j <= static_cast<std::size_t>(n) && j < g.size(); ++j) s += g[j][*p];
  return s;
}

void PartitionOfUnity::validate() const {
  if (g.empty()) throw InvalidArgument("partition of unity needs at least one sequence");
  for (const auto& gj : g) {
    if (gj.size() != omega.size()) throw InvalidArgument("partition sequences must cover Omega");
    for (const double x : gj) {
      if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("partition values must lie in [0,1]");
    }
  }
  if (weight(0, {0, 0}) != 1.0) throw InvalidArgument("g_0(0,0) must be 1");
  for (std::size_t p = 0; p < omega.size(); ++p) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      s += g[j][p];
      for (std::size_t j2 = j + static_cast<std::size_t>(m_star) + 1; j2 < g.size(); ++j2) {
        if (g[j][p] * g[j2][p] != 0.0) throw InvalidArgument("partition sequences overlap beyond m*");
      }
    }
    if (std::abs(s - 1.0) > 1e-12) throw InvalidArgument("partition sequences must sum to 1 on Omega");
  }
}

BiSequence PartitionOfUnity::cumulative_sequence(int n) const {
  std::size_t r = 0;
  std::size_t c = 0;
  for (const auto& k : omega.indices()) {
    r = std::max(r, k.k1 + 1);
    c = std::max(c, k.k2 + 1);
  }
  BiSequence h = BiSequence::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cumulative(n, {i, j});
  }
  return h;
}

PartitionOfUnity default_partition(const FrequencySet& omega) {
  if (omega.size() == 0) throw InvalidArgument("Omega is empty");
  PartitionOfUnity out;
  out.omega = omega;
  out.dyadic_shells = true;
  const int top = omega.max_shell();
  out.g.assign(static_cast<std::size_t>(top + 1), std::vector<double>(omega.size(), 0.0));
  for (std::size_t p = 0; p < omega.size(); ++p) out.g[static_cast<std::size_t>(shell(omega.indices()[p]))][p] = 1.0;
  return out;
}

// --- reconstruction and analysis operators ----------------------------------

namespace {

GridValues weighted_synthesis(const TensorBasis& basis, std::vector<double> c,
                              const std::function<double(const Freq&)>& weight) {
  for (std::size_t p = 0; p < c.size(); ++p) c[p] *= weight(basis.index()[p]);
  return basis.synthesize(c);
}

}  // namespace

GridValues sigma(const TensorBasis& basis, const PartitionOfUnity& g, const GridValues& f, int n) {
  return weighted_synthesis(basis, basis.analyze(f), [&](const Freq& k) { return g.cumulative(n, k); });
}

GridValues tau(const TensorBasis& basis, const PartitionOfUnity& g, const GridValues& f, std::size_t j) {
  if (j == 0) return sigma(basis, g, f, 0);
  return weighted_synthesis(basis, basis.analyze(f), [&](const Freq& k) { return g.weight(j, k); });
}

SigmaTau sigma_tau(const TensorBasis& basis, const PartitionOfUnity& g, const GridValues& f, int n) {
  SigmaTau out;
  out.sigma = sigma(basis, g, f, n);
  for (int j = 0; j <= n; ++j) out.tau.push_back(tau(basis, g, f, static_cast<std::size_t>(j)));
  return out;
}

double sup_norm(const GridValues& f, const GridSet& grid) {
  if (f.size() != grid.size()) throw InvalidArgument("one value per grid point required");
  double m = 0.0;
  for (const double x : f) m = std::max(m, std::abs(x));
  return m;
}

double l2_norm2(const GridValues& f, const GridSet& grid) {
  if (f.size() != grid.size()) throw InvalidArgument("one value per grid point required");
  double s = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) s += f[p] * f[p] * grid.points()[p].mass;
  return s;
}

DegreeOfApproximation degree_of_approximation(const GridSet& grid, const GlobalBasis& es_basis,
                                              const GlobalBasis& os_basis, const PartitionOfUnity& g,
                                              const GridValues& f, int n) {
  DegreeOfApproximation out;
  if (n < 0) {
    out.value = sup_norm(f, grid);
    return out;
  }
  std::vector<Freq> cols;
  for (const auto& k : g.omega.indices()) {
    if (g.cumulative(n, k) > 0.0) cols.push_back(k);
  }
  const auto rows = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) a.col(static_cast<Eigen::Index>(c)) = tensor_values(grid, es_basis, os_basis, cols[c]);
  // An orthonormal basis of the column span keeps the LP small and well scaled.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q = Eigen::MatrixXd(qr.householderQ()).leftCols(rank);
  out.dimension = static_cast<std::size_t>(rank);
  out.value = chebyshev_fit(q, Eigen::Map<const Eigen::VectorXd>(f.data(), rows)).value;
  return out;
}

double best_uniform_approx_2d(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                              const PartitionOfUnity& g, const GridValues& f, int n) {
  return degree_of_approximation(grid, es_basis, os_basis, g, f, n).value;
}

std::string tensor_coefficients_csv(const TensorBasis& basis, const std::vector<double>& coefficients) {
  if (coefficients.size() != basis.size()) throw InvalidArgument("one coefficient per basis function required");
  std::ostringstream out;
  out << "k1,k2,shell,coefficient\n";
  char buf[128];
  for (std::size_t p = 0; p < coefficients.size(); ++p) {
    const auto& k = basis.index()[p];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%d,%.17g\n", k.k1, k.k2, shell(k), coefficients[p]);
    out << buf;
  }
  return out.str();
}

}  // namespace ditree
