#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ditree/filtration.hpp"
#include "ditree/minimax.hpp"

namespace ditree {

/// Right-continuous step function on [x_0, x_M): value values[i] on
/// [breakpoints[i], breakpoints[i+1]).
struct PiecewiseConstant {
  std::vector<double> breakpoints;  // strictly increasing, size M+1
  std::vector<double> values;       // size M

  /// Throws InvalidArgument when the sizes or the ordering are off.
  void validate() const;
  /// Zero outside [x_0, x_M).
  double operator()(double x) const;
  double sup_norm() const;
  /// Exact integral of the product over the merged breakpoint list.
  static double integral_product(const PiecewiseConstant& f, const PiecewiseConstant& g);
  /// CSV x0,x1,value.
  std::string to_csv() const;
};

/// Local tree polynomials of a local filtration [a, a + w) with child
/// weights p_0..p_{m-1}. T is double or Rational.
template <class T>
class LocalBasis {
 public:
  /// Throws InvalidArgument for m < 2 or a nonpositive weight.
  LocalBasis(T a, std::vector<T> p);

  std::size_t size() const noexcept { return p_.size(); }
  const T& a() const noexcept { return a_; }
  const T& w() const noexcept { return w_; }
  const std::vector<T>& p() const noexcept { return p_; }
  /// P_0 = 0, P_k = p_0 + ... + p_{k-1}; P_m = w.
  const T& P(std::size_t k) const { return P_.at(k); }

  /// phi_k on child interval I_j (phi_k is constant there).
  T phi_on_child(std::size_t k, std::size_t j) const;
  T phi(std::size_t k, const T& x) const;
  /// Auxiliary phi~_{k+1}; zero for k = m-1. The constant 1 of the unit-weight
  /// statement becomes w so the function stays orthogonal for any w.
  T phi_tilde(std::size_t k_plus_1, const T& x) const;
  /// Squared norm p_k P_k P_{k+1} (w for k = 0).
  T norm2(std::size_t k) const;

 private:
  T a_;
  T w_;
  std::vector<T> p_;
  std::vector<T> P_;
};

extern template class LocalBasis<double>;
extern template class LocalBasis<Rational>;

struct LocalIdentityReport {
  double orthogonality = 0.0;       // |int phi_k phi_l - delta norm2|
  double quadrature = 0.0;          // node quadrature vs integral
  double inverse_quadrature = 0.0;  // 1/w + sum ... vs delta / p_j
  double temporal = 0.0;            // int phi_j phi~_{k+1}, j <= k
  double max() const;
};

/// Integrals are exact sums over the child intervals.
template <class T>
LocalIdentityReport verify_local_identities(const LocalBasis<T>& basis);

/// psi_n restricted to the leaf partition: left_value on leaves [lo, mid),
/// right_value on [mid, hi), zero elsewhere. psi_0 is the constant 1.
struct PsiAtom {
  std::size_t lo = 0;
  std::size_t mid = 0;
  std::size_t hi = 0;
  double left_value = 1.0;
  double right_value = 0.0;
  double aleph = 1.0;
  Rational left_exact = 1;
  Rational right_exact = 0;
  Rational aleph_exact = 1;
};

/// Global orthogonal system psi_n over a filtration in LLO order. With parent
/// v = [a, b) and child u = [a', b'), psi_n equals phi_l(v) / |v|:
/// (b'-a')/(b-a) on [a, a') and -(a'-a)/(b-a) on [a', b'), so that
/// 1/aleph_n = (b'-a')(a'-a)(b'-a)/(b-a)^2.
class GlobalBasis {
 public:
  explicit GlobalBasis(const Filtration& f);

  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t num_leaves() const noexcept { return widths_.size(); }
  const Filtration& filtration() const noexcept { return filtration_; }
  const LloEnumeration& llo() const noexcept { return llo_; }
  const PsiAtom& atom(std::size_t n) const { return atoms_.at(n); }

  double aleph(std::size_t n) const { return atom(n).aleph; }
  /// Value of psi_n on leaf i.
  double value(std::size_t n, std::size_t leaf) const;
  /// psi_n on every leaf (orthonormal: times sqrt(aleph_n)).
  std::vector<double> leaf_values(std::size_t n, bool orthonormal = false) const;
  PiecewiseConstant psi(std::size_t n, bool orthonormal = false) const;
  /// Exact int psi_n psi_m.
  Rational inner_exact(std::size_t n, std::size_t m) const;

  const std::vector<double>& leaf_widths() const noexcept { return widths_; }
  const std::vector<Rational>& leaf_widths_exact() const noexcept { return widths_exact_; }

  /// Rejects f unless every breakpoint of f is a leaf edge.
  std::vector<double> to_leaf_values(const PiecewiseConstant& f) const;
  PiecewiseConstant from_leaf_values(const std::vector<double>& values) const;

 private:
  Filtration filtration_;
  LloEnumeration llo_;
  std::vector<PsiAtom> atoms_;
  std::vector<double> widths_;
  std::vector<Rational> widths_exact_;
  std::vector<double> edges_;
};

/// Leaf-measurable functions are handled as one value per leaf.
using LeafValues = std::vector<double>;

/// f_hat(k) = aleph_k int f psi_k, all k.
std::vector<double> analyze(const GlobalBasis& basis, const LeafValues& f);
std::vector<double> analyze(const GlobalBasis& basis, const PiecewiseConstant& f);
/// sum_k c_k psi_k (missing trailing coefficients are zero).
LeafValues synthesize(const GlobalBasis& basis, const std::vector<double>& coefficients);
/// sigma_n(h, f) = sum_{k <= n} h_k f_hat(k) psi_k with n = h.size() - 1.
LeafValues filtered_sum(const GlobalBasis& basis, const std::vector<double>& h, const LeafValues& f);
/// s_n(f) = sum_{k <= n} f_hat(k) psi_k.
LeafValues partial_sum(const GlobalBasis& basis, const LeafValues& f, std::size_t n);

/// V(h) = sup_n |h_n| + sum_{k<n} |h_{k+1} - h_k| for finitely supported h.
double variation_1d(const std::vector<double>& h);

double sup_norm(const LeafValues& f);

/// E_n(f) = min over span{psi_0..psi_n} of the uniform error; exact finite
/// minimax over the leaf cells.
MinimaxResult best_uniform_approx(const GlobalBasis& basis, const LeafValues& f, std::size_t n);

/// CSV index,llo_vertex,coefficient,aleph; llo_vertex is the cluster-tree
/// node id of the LLO vertex.
std::string coefficients_csv(const GlobalBasis& basis, const std::vector<double>& coefficients);

}  // namespace ditree
