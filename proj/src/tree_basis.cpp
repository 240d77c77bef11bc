#include "ditree/tree_basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ditree/error.hpp"

namespace ditree {

namespace {

double to_double(double x) { return x; }
double to_double(const Rational& x) { return x.get_d(); }

constexpr double kEdgeTolerance = 1e-12;

}  // namespace

// --- PiecewiseConstant ------------------------------------------------------

void PiecewiseConstant::validate() const {
  if (breakpoints.size() != values.size() + 1) throw InvalidArgument("piecewise constant needs M+1 breakpoints");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) throw InvalidArgument("breakpoints must be strictly increasing");
  }
}

double PiecewiseConstant::operator()(double x) const {
  if (values.empty() || x < breakpoints.front() || x >= breakpoints.back()) return 0.0;
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double PiecewiseConstant::sup_norm() const {
  double m = 0.0;
  for (const double v : values) m = std::max(m, std::abs(v));
  return m;
}

double PiecewiseConstant::integral_product(const PiecewiseConstant& f, const PiecewiseConstant& g) {
  std::vector<double> xs = f.breakpoints;
  xs.insert(xs.end(), g.breakpoints.begin(), g.breakpoints.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double fx = f(xs[i]);
    const double gx = g(xs[i]);
    if (fx != 0.0 && gx != 0.0) s += fx * gx * (xs[i + 1] - xs[i]);
  }
  return s;
}

std::string PiecewiseConstant::to_csv() const {
  std::ostringstream out;
  out << "x0,x1,value\n";
  char buf[96];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", breakpoints[i], breakpoints[i + 1], values[i]);
    out << buf;
  }
  return out.str();
}

// --- LocalBasis -------------------------------------------------------------

template <class T>
LocalBasis<T>::LocalBasis(T a, std::vector<T> p) : a_(std::move(a)), w_(0), p_(std::move(p)) {
  if (p_.size() < 2) throw InvalidArgument("a local filtration needs at least 2 children");
  P_.push_back(T(0));
  for (const auto& x : p_) {
    if (!(x > 0)) throw InvalidArgument("local filtration weights must be positive");
    P_.push_back(P_.back() + x);
  }
  w_ = P_.back();
}

template <class T>
T LocalBasis<T>::phi_on_child(std::size_t k, std::size_t j) const {
  if (k >= size() || j >= size()) throw InvalidArgument("local index out of range");
  if (k == 0) return T(1);
  if (j < k) return p_[k];
  if (j == k) return -P_[k];
  return T(0);
}

template <class T>
T LocalBasis<T>::phi(std::size_t k, const T& x) const {
  const T rel = x - a_;
  if (rel < 0 || !(rel < w_)) return T(0);
  const auto it = std::upper_bound(P_.begin(), P_.end(), rel);
  return phi_on_child(k, static_cast<std::size_t>(it - P_.begin()) - 1);
}

template <class T>
T LocalBasis<T>::phi_tilde(std::size_t k_plus_1, const T& x) const {
  if (k_plus_1 == 0 || k_plus_1 > size()) throw InvalidArgument("phi~ index out of range");
  if (k_plus_1 == size()) return T(0);
  const T rel = x - a_;
  if (rel < 0 || !(rel < w_)) return T(0);
  const T& P = P_[k_plus_1];
  return rel < P ? T(w_ - P) : T(-P);
}

template <class T>
T LocalBasis<T>::norm2(std::size_t k) const {
  if (k == 0) return w_;
  return p_.at(k) * P_[k] * P_[k + 1];
}

template class LocalBasis<double>;
template class LocalBasis<Rational>;

double LocalIdentityReport::max() const {
  return std::max({orthogonality, quadrature, inverse_quadrature, temporal});
}

template <class T>
LocalIdentityReport verify_local_identities(const LocalBasis<T>& basis) {
  const std::size_t m = basis.size();
  const auto& p = basis.p();
  LocalIdentityReport r;
  // Values at the nodes a + P_j by right continuity; evaluating phi at a
  // rounded a + P_j in floating point can land in the previous child.
  auto node_value = [&](std::size_t k, std::size_t j) { return basis.phi_on_child(k, j); };
  auto tilde_node_value = [&](std::size_t k_plus_1, std::size_t j) -> T {
    if (k_plus_1 == m) return T(0);
    const T& P = basis.P(k_plus_1);
    return j < k_plus_1 ? T(basis.w() - P) : T(-P);
  };
  auto bump = [](double& slot, const T& err) { slot = std::max(slot, std::abs(to_double(err))); };
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = 0; l < m; ++l) {
      T integral = 0;
      T quad = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const T mid = basis.a() + basis.P(j) + p[j] / 2;
        integral += p[j] * basis.phi(k, mid) * basis.phi(l, mid);
        quad += p[j] * node_value(k, j) * node_value(l, j);
      }
      bump(r.orthogonality, integral - (k == l ? basis.norm2(k) : T(0)));
      bump(r.quadrature, quad - integral);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t l = 0; l < m; ++l) {
      T s = T(1) / basis.w();
      for (std::size_t k = 1; k < m; ++k) {
        s += node_value(k, j) * node_value(k, l) / basis.norm2(k);
      }
      bump(r.inverse_quadrature, s - (j == l ? T(T(1) / p[j]) : T(0)));
    }
  }
  for (std::size_t k = 0; k + 1 < m; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      T s = 0;
      for (std::size_t i = 0; i < m; ++i) {
        s += p[i] * basis.phi_on_child(j, i) * tilde_node_value(k + 1, i);
      }
      bump(r.temporal, s);
    }
  }
  return r;
}

template LocalIdentityReport verify_local_identities(const LocalBasis<double>&);
template LocalIdentityReport verify_local_identities(const LocalBasis<Rational>&);

// --- GlobalBasis ------------------------------------------------------------

GlobalBasis::GlobalBasis(const Filtration& f) : filtration_(f), llo_(filtration_) {
  const auto& edges = filtration_.leaf_edges();
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    Rational w = edges[i + 1] - edges[i];
    widths_exact_.push_back(w);
    widths_.push_back(w.get_d());
  }
  for (const auto& e : edges) edges_.push_back(e.get_d());
  const std::size_t n_leaves = widths_.size();
  atoms_.push_back({0, n_leaves, n_leaves, 1.0, 0.0, 1.0, 1, 0, 1});
  for (std::size_t n = 1; n < llo_.size(); ++n) {
    const auto& e = llo_[n];
    const auto& u = filtration_.node(e.node);
    const auto& v = filtration_.node(e.parent);
    PsiAtom atom;
    atom.lo = v.leaf_lo;
    atom.mid = u.leaf_lo;
    atom.hi = u.leaf_hi;
    const Rational width_v = v.b - v.a;
    const Rational width_u = u.b - u.a;
    const Rational left_part = u.a - v.a;
    atom.left_exact = width_u / width_v;
    atom.right_exact = -left_part / width_v;
    atom.aleph_exact = width_v * width_v / (width_u * left_part * (u.b - v.a));
    atom.left_value = atom.left_exact.get_d();
    atom.right_value = atom.right_exact.get_d();
    atom.aleph = atom.aleph_exact.get_d();
    atoms_.push_back(std::move(atom));
  }
}

double GlobalBasis::value(std::size_t n, std::size_t leaf) const {
  const auto& a = atom(n);
  if (leaf < a.lo || leaf >= a.hi) return 0.0;
  return leaf < a.mid ? a.left_value : a.right_value;
}

std::vector<double> GlobalBasis::leaf_values(std::size_t n, bool orthonormal) const {
  const auto& a = atom(n);
  const double scale = orthonormal ? std::sqrt(a.aleph) : 1.0;
  std::vector<double> out(num_leaves(), 0.0);
  for (std::size_t i = a.lo; i < a.mid; ++i) out[i] = scale * a.left_value;
  for (std::size_t i = a.mid; i < a.hi; ++i) out[i] = scale * a.right_value;
  return out;
}

PiecewiseConstant GlobalBasis::psi(std::size_t n, bool orthonormal) const {
  return from_leaf_values(leaf_values(n, orthonormal));
}

Rational GlobalBasis::inner_exact(std::size_t n, std::size_t m) const {
  const auto& x = atom(n);
  const auto& y = atom(m);
  auto exact = [](const PsiAtom& a, std::size_t i) -> Rational {
    if (i < a.lo || i >= a.hi) return 0;
    return i < a.mid ? a.left_exact : a.right_exact;
  };
  Rational s = 0;
  for (std::size_t i = std::max(x.lo, y.lo); i < std::min(x.hi, y.hi); ++i) {
    s += exact(x, i) * exact(y, i) * widths_exact_[i];
  }
  return s;
}

std::vector<double> GlobalBasis::to_leaf_values(const PiecewiseConstant& f) const {
  f.validate();
  if (std::abs(f.breakpoints.front() - edges_.front()) > kEdgeTolerance ||
      std::abs(f.breakpoints.back() - edges_.back()) > kEdgeTolerance) {
    throw InvalidArgument("function must be defined on [0,1)");
  }
  for (const double x : f.breakpoints) {
    const auto it = std::lower_bound(edges_.begin(), edges_.end(), x - kEdgeTolerance);
    if (it == edges_.end() || std::abs(*it - x) > kEdgeTolerance) {
      throw InvalidArgument("breakpoints do not refine into the leaf partition");
    }
  }
  std::vector<double> out(num_leaves());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(0.5 * (edges_[i] + edges_[i + 1]));
  return out;
}

PiecewiseConstant GlobalBasis::from_leaf_values(const std::vector<double>& values) const {
  if (values.size() != num_leaves()) throw InvalidArgument("one value per leaf required");
  return {edges_, values};
}

// --- analysis ---------------------------------------------------------------

std::vector<double> analyze(const GlobalBasis& basis, const LeafValues& f) {
  if (f.size() != basis.num_leaves()) throw InvalidArgument("one value per leaf required");
  const auto& w = basis.leaf_widths();
  std::vector<double> out(basis.size());
  for (std::size_t n = 0; n < basis.size(); ++n) {
    const auto& a = basis.atom(n);
    double left = 0.0;
    double right = 0.0;
    for (std::size_t i = a.lo; i < a.mid; ++i) left += f[i] * w[i];
    for (std::size_t i = a.mid; i < a.hi; ++i) right += f[i] * w[i];
    out[n] = a.aleph * (a.left_value * left + a.right_value * right);
  }
  return out;
}

std::vector<double> analyze(const GlobalBasis& basis, const PiecewiseConstant& f) {
  return analyze(basis, basis.to_leaf_values(f));
}

LeafValues synthesize(const GlobalBasis& basis, const std::vector<double>& coefficients) {
  if (coefficients.size() > basis.size()) throw InvalidArgument("more coefficients than basis functions");
  LeafValues out(basis.num_leaves(), 0.0);
  for (std::size_t n = 0; n < coefficients.size(); ++n) {
    const double c = coefficients[n];
    if (c == 0.0) continue;
    const auto& a = basis.atom(n);
    for (std::size_t i = a.lo; i < a.mid; ++i) out[i] += c * a.left_value;
    for (std::size_t i = a.mid; i < a.hi; ++i) out[i] += c * a.right_value;
  }
  return out;
}

LeafValues filtered_sum(const GlobalBasis& basis, const std::vector<double>& h, const LeafValues& f) {
  const auto fhat = analyze(basis, f);
  const std::size_t n = std::min(h.size(), fhat.size());
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = h[k] * fhat[k];
  return synthesize(basis, c);
}

LeafValues partial_sum(const GlobalBasis& basis, const LeafValues& f, std::size_t n) {
  return filtered_sum(basis, std::vector<double>(n + 1, 1.0), f);
}

double variation_1d(const std::vector<double>& h) {
  // The sup runs over all n, including indices past the support where h_n = 0.
  double best = 0.0;
  double jumps = 0.0;
  for (std::size_t n = 0; n <= h.size(); ++n) {
    const double hn = n < h.size() ? h[n] : 0.0;
    if (n > 0) jumps += std::abs(hn - h[n - 1]);
    best = std::max(best, std::abs(hn) + jumps);
  }
  return best;
}

double sup_norm(const LeafValues& f) {
  double m = 0.0;
  for (const double x : f) m = std::max(m, std::abs(x));
  return m;
}

MinimaxResult best_uniform_approx(const GlobalBasis& basis, const LeafValues& f, std::size_t n) {
  if (f.size() != basis.num_leaves()) throw InvalidArgument("one value per leaf required");
  if (n >= basis.size()) throw InvalidArgument("degree exceeds the basis size");
  const auto rows = static_cast<Eigen::Index>(basis.num_leaves());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(n + 1));
  for (std::size_t k = 0; k <= n; ++k) {
    const auto v = basis.leaf_values(k);
    for (Eigen::Index i = 0; i < rows; ++i) b(i, static_cast<Eigen::Index>(k)) = v[static_cast<std::size_t>(i)];
  }
  return chebyshev_fit(b, Eigen::Map<const Eigen::VectorXd>(f.data(), rows));
}

std::string coefficients_csv(const GlobalBasis& basis, const std::vector<double>& coefficients) {
  std::ostringstream out;
  out << "index,llo_vertex,coefficient,aleph\n";
  char buf[128];
  for (std::size_t n = 0; n < coefficients.size(); ++n) {
    const auto node = basis.filtration().node(basis.llo()[n].node).tree_node;
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", n, node, coefficients[n], basis.aleph(n));
    out << buf;
  }
  return out.str();
}

}  // namespace ditree
