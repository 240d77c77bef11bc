#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ditree/filtration.hpp"
#include "ditree/random.hpp"
#include "ditree/tree_basis.hpp"

namespace ditree {

/// One digraph vertex as the rectangle (ES leaf interval) x (OS leaf interval).
struct GridPoint {
  std::size_t vertex = 0;
  std::size_t i = 0;  // ES leaf position
  std::size_t j = 0;  // OS leaf position
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  double mass = 0.0;  // nu*, normalized when the grid is
  Rational mass_exact;
};

/// Values of a function on the grid points, in point order.
using GridValues = std::vector<double>;

class GridSet {
 public:
  /// Throws InvalidArgument when a vertex is missing from either filtration.
  GridSet(const Filtration& es, const Filtration& os, bool normalize = true);

  const std::vector<GridPoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const Filtration& es() const noexcept { return es_; }
  const Filtration& os() const noexcept { return os_; }
  /// Sum of the raw products w1 w2.
  const Rational& raw_total_mass() const noexcept { return raw_total_; }
  bool normalized() const noexcept { return normalized_; }
  /// N1 * N2 leaf cells of I^2.
  std::size_t cells() const noexcept { return es_.num_leaves() * os_.num_leaves(); }
  /// Every vertical and every horizontal leaf stripe holds at least one point.
  bool stripes_covered() const;
  /// Point index of a vertex.
  std::size_t index_of(std::size_t vertex) const;

  /// CSV vertex,x0,x1,y0,y1,mass.
  std::string to_csv() const;

 private:
  Filtration es_;
  Filtration os_;
  std::vector<GridPoint> points_;
  std::map<std::size_t, std::size_t> index_of_vertex_;
  Rational raw_total_;
  bool normalized_ = true;
};

GridSet build_grid(const Filtration& es, const Filtration& os, bool normalize = true);

struct Freq {
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  auto operator<=>(const Freq&) const = default;
};

/// max(ceil(log2(k1+1)), ceil(log2(k2+1))): shell j holds max(k1, k2) in [2^(j-1), 2^j).
int shell(const Freq& k);

class FrequencySet {
 public:
  FrequencySet() = default;
  explicit FrequencySet(std::vector<Freq> indices);

  /// Lexicographic order.
  const std::vector<Freq>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool contains(const Freq& k) const;
  std::optional<std::size_t> position(const Freq& k) const;
  int max_shell() const;
  /// Every k in Z+^2 within l-infinity distance 2 of the set.
  FrequencySet enlarged() const;

 private:
  std::vector<Freq> indices_;
};

/// k is in Omega iff psi_k1(x1) psi_k2(x2) is nonzero at some grid point.
FrequencySet compute_omega(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis);

/// Restricted tensor functions psi_k1 sqrt(aleph_k1) * psi_k2 sqrt(aleph_k2) on the grid.
Eigen::VectorXd tensor_values(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                              const Freq& k);

enum class BasisMode { kIdealized, kExact };

/// A family of functions on the grid indexed by frequencies. Idealized: the
/// restricted orthonormal tensor polynomials over Omega. Exact: modified
/// Gram-Schmidt of those in L2(nu*), shell by shell, dropping dependent ones.
class TensorBasis {
 public:
  BasisMode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return index_.size(); }
  const std::vector<Freq>& index() const noexcept { return index_; }
  /// Columns are the functions on the grid (points x size).
  const Eigen::MatrixXd& matrix() const noexcept { return q_; }
  const Eigen::VectorXd& mass() const noexcept { return mass_; }
  /// Indices removed as numerically dependent (exact mode).
  const std::vector<Freq>& dropped() const noexcept { return dropped_; }
  /// max |<e_k, e_m> - delta_km| over the family.
  double orthogonality_defect() const;

  /// f_hat(k) = sum_x f(x) e_k(x) nu*(x), aligned with index().
  std::vector<double> analyze(const GridValues& f) const;
  GridValues synthesize(const std::vector<double>& coefficients) const;

  friend TensorBasis idealized_basis(const GridSet&, const GlobalBasis&, const GlobalBasis&, const FrequencySet&);
  friend TensorBasis gram_orthonormalize(const GridSet&, const GlobalBasis&, const GlobalBasis&,
                                         const FrequencySet&, double);

 private:
  BasisMode mode_ = BasisMode::kIdealized;
  std::vector<Freq> index_;
  std::vector<Freq> dropped_;
  Eigen::MatrixXd q_;
  Eigen::VectorXd mass_;
};

/// Order used for the exact basis: shell, then k1 + k2, then k1.
bool shell_order(const Freq& a, const Freq& b);

TensorBasis idealized_basis(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                            const FrequencySet& omega);
/// A residual is dropped when its norm falls below `drop_tolerance` times the
/// norm of the original function.
TensorBasis gram_orthonormalize(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                                const FrequencySet& omega, double drop_tolerance = 1e-9);

/// s_m(f) = sum over basis indices k <= m (componentwise) of f_hat(k) e_k.
GridValues tensor_partial_sum(const TensorBasis& basis, const std::vector<double>& coefficients, const Freq& m);

/// Finitely supported bi-sequence: h(k1, k2) = m(k1, k2) inside the matrix, 0 outside.
using BiSequence = Eigen::MatrixXd;

/// sup|h| + sup_k1 sum_k2 |Delta_2 h| + sup_k2 sum_k1 |Delta_1 h| + sum |Delta h|.
double variation_2d(const BiSequence& h);
/// Mixed forward difference h(k1+1,k2+1) - h(k1+1,k2) - h(k1,k2+1) + h(k1,k2);
/// same shape as h, which holds its whole support.
BiSequence mixed_difference(const BiSequence& h);

/// sum_k h(k) f_hat(k) e_k.
GridValues filtered_sum_2d(const TensorBasis& basis, const BiSequence& h, const GridValues& f);
/// The same sum written as sum_k Delta h(k) s_k(f).
GridValues filtered_sum_2d_by_parts(const TensorBasis& basis, const BiSequence& h, const GridValues& f);

/// g_j on Omega; g[j][p] is the weight of omega.indices()[p] in sequence j.
struct PartitionOfUnity {
  FrequencySet omega;
  std::vector<std::vector<double>> g;
  int m_star = 0;
  /// g_j is the indicator of dyadic shell j; H_n is then read as the box
  /// indicator off Omega too, where the operators never look.
  bool dyadic_shells = false;

  std::size_t count() const noexcept { return g.size(); }
  double weight(std::size_t j, const Freq& k) const;
  /// H_n(k) = g_0(k) + ... + g_n(k); n < 0 gives 0.
  double cumulative(int n, const Freq& k) const;
  /// Throws InvalidArgument unless g_0(0) = 1, values lie in [0,1], the
  /// sequences sum to 1 on Omega and overlap only within m*.
  void validate() const;
  /// H_n as a bi-sequence over the bounding box of Omega.
  BiSequence cumulative_sequence(int n) const;
};

/// Crisp dyadic shells: g_j = indicator of Omega intersected with shell j, m* = 0.
PartitionOfUnity default_partition(const FrequencySet& omega);

/// sigma_n(f) = sum H_n(k) f_hat(k) e_k.
GridValues sigma(const TensorBasis& basis, const PartitionOfUnity& g, const GridValues& f, int n);
/// tau_0 = sigma_0, tau_j = sum g_j(k) f_hat(k) e_k.
GridValues tau(const TensorBasis& basis, const PartitionOfUnity& g, const GridValues& f, std::size_t j);

struct SigmaTau {
  GridValues sigma;
  std::vector<GridValues> tau;  // tau_0..tau_n
};
SigmaTau sigma_tau(const TensorBasis& basis, const PartitionOfUnity& g, const GridValues& f, int n);

double sup_norm(const GridValues& f, const GridSet& grid);
double l2_norm2(const GridValues& f, const GridSet& grid);

/// E_n(f) over P_n = span{psi_k restricted to the grid : H_n(k) > 0}, solved
/// as a finite minimax LP on an orthonormal basis of that span. E_n = ||f|| for n < 0.
double best_uniform_approx_2d(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                              const PartitionOfUnity& g, const GridValues& f, int n);

/// Positive weights mu on the enlarged frequency set.
struct MultiplierSequence {
  int order = 1;
  std::map<Freq, double> mu;
  /// Per shell j: V(mu_j) / 2^(jr) and V(mu_j^[-1]) * 2^(jr).
  std::vector<double> upper_constant;
  std::vector<double> lower_constant;

  double operator()(const Freq& k) const;
};

/// mu(k) = 2^(r shell(k)) on the enlargement of Omega, with the per-shell
/// variation constants recorded against g.
MultiplierSequence default_multiplier(const PartitionOfUnity& g, int r);

/// D(f): multiply every coefficient by mu and synthesize. Throws
/// InvalidArgument when mu is not positive on a basis index.
GridValues derivative(const TensorBasis& basis, const MultiplierSequence& mu, const GridValues& f);

/// Upper estimate of K(f, delta) = inf ||f - g|| + delta^r ||D g|| over
/// g in {0, sigma_0(f), sigma_1(f), ...}.
double k_functional(const TensorBasis& basis, const PartitionOfUnity& g, const MultiplierSequence& mu,
                    const GridValues& f, double delta);

struct DecayFit {
  std::vector<double> sequence;
  double gamma = 0.0;   // fitted exponent, a_n ~ 2^(-gamma n)
  std::size_t used = 0;  // terms in the fit
  bool usable = false;
};

struct SmoothnessReport {
  DecayFit best_approx;       // E_n(f), degree n = shell n
  DecayFit tau_norms;         // ||tau_j(f)||
  DecayFit sigma_errors;      // ||f - sigma_n(f)||
  DecayFit k_functional;      // K(f, 2^-j)
  double spread = 0.0;        // max - min of the usable gammas
  bool insufficient_resolution = false;
  bool finite_band = false;   // E_n(f) vanishes from some n below the last shell
  std::optional<int> band_limit;
};

/// Least-squares slope of log2 a_n over the terms above `floor` times the
/// largest one; a fit needs three terms.
DecayFit fit_decay(const std::vector<double>& sequence, double floor = 1e-10);

SmoothnessReport smoothness_profile(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                                    const TensorBasis& basis, const PartitionOfUnity& g,
                                    const MultiplierSequence& mu, const GridValues& f);

/// E_n(f) together with the dimension of P_n.
struct DegreeOfApproximation {
  double value = 0.0;
  std::size_t dimension = 0;
};
DegreeOfApproximation degree_of_approximation(const GridSet& grid, const GlobalBasis& es_basis,
                                              const GlobalBasis& os_basis, const PartitionOfUnity& g,
                                              const GridValues& f, int n);

std::string smoothness_to_json(const SmoothnessReport& report);

/// Test signal sum_j 2^(-j gamma) s_j over the shells of the basis, where s_j
/// is a random combination of the shell-j functions scaled to sup norm 1.
GridValues power_law_signal(const TensorBasis& basis, double gamma, Rng& rng);

/// CSV k1,k2,shell,coefficient.
std::string tensor_coefficients_csv(const TensorBasis& basis, const std::vector<double>& coefficients);

}  // namespace ditree
