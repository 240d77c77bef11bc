#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "ditree/analysis.hpp"
#include "ditree/error.hpp"

namespace ditree {

double MultiplierSequence::operator()(const Freq& k) const {
  const auto it = mu.find(k);
  return it == mu.end() ? 0.0 : it->second;
}

namespace {

// g_j over the bounding box of Omega, times `scale(k)`.
BiSequence shell_sequence(const PartitionOfUnity& g, std::size_t j, const std::function<double(const Freq&)>& scale) {
  std::size_t r = 0;
  std::size_t c = 0;
  for (const auto& k : g.omega.indices()) {
    r = std::max(r, k.k1 + 1);
    c = std::max(c, k.k2 + 1);
  }
  BiSequence h = BiSequence::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  const int n = static_cast<int>(j);
  for (std::size_t a = 0; a < r; ++a) {
    for (std::size_t b = 0; b < c; ++b) {
      const Freq k{a, b};
      const double w = g.cumulative(n, k) - g.cumulative(n - 1, k);
      if (w != 0.0) h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = w * scale(k);
    }
  }
  return h;
}

}  // namespace

MultiplierSequence default_multiplier(const PartitionOfUnity& g, int r) {
  if (r < 1) throw InvalidArgument("multiplier order must be positive");
  MultiplierSequence out;
  out.order = r;
  auto formula = [r](const Freq& k) { return std::ldexp(1.0, r * shell(k)); };
  const auto region = g.omega.enlarged();
  for (const auto& k : region.indices()) out.mu[k] = formula(k);
  for (std::size_t j = 0; j < g.count(); ++j) {
    const double scale = std::ldexp(1.0, r * static_cast<int>(j));
    // The box extension of the shells can reach past the enlargement of Omega.
    const auto up = shell_sequence(g, j, formula);
    const auto down = shell_sequence(g, j, [&](const Freq& k) { return 1.0 / formula(k); });
    out.upper_constant.push_back(variation_2d(up) / scale);
    out.lower_constant.push_back(variation_2d(down) * scale);
  }
  return out;
}

GridValues derivative(const TensorBasis& basis, const MultiplierSequence& mu, const GridValues& f) {
  auto c = basis.analyze(f);
  for (std::size_t p = 0; p < c.size(); ++p) {
    const double m = mu(basis.index()[p]);
    if (!(m > 0.0)) throw InvalidArgument("multiplier must be positive on every basis index");
    c[p] *= m;
  }
  return basis.synthesize(c);
}

namespace {

double plain_sup(const GridValues& f) {
  double m = 0.0;
  for (const double x : f) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double k_functional(const TensorBasis& basis, const PartitionOfUnity& g, const MultiplierSequence& mu,
                    const GridValues& f, double delta) {
  if (delta < 0.0) throw InvalidArgument("delta must be nonnegative");
  double best = plain_sup(f);
  const double weight = std::pow(delta, mu.order);
  for (std::size_t n = 0; n < g.count(); ++n) {
    const auto s = sigma(basis, g, f, static_cast<int>(n));
    GridValues diff(f.size());
    for (std::size_t p = 0; p < f.size(); ++p) diff[p] = f[p] - s[p];
    const double d = weight == 0.0 ? 0.0 : weight * plain_sup(derivative(basis, mu, s));
    best = std::min(best, plain_sup(diff) + d);
  }
  return best;
}

DecayFit fit_decay(const std::vector<double>& sequence, double floor) {
  DecayFit out;
  out.sequence = sequence;
  double top = 0.0;
  for (const double a : sequence) top = std::max(top, std::abs(a));
  if (top == 0.0) return out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t n = 0; n < sequence.size(); ++n) {
    const double a = std::abs(sequence[n]);
    if (!(a > floor * top)) continue;
    const double x = static_cast<double>(n);
    const double y = std::log2(a);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++out.used;
  }
  if (out.used < 3) return out;
  const double m = static_cast<double>(out.used);
  out.gamma = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.usable = true;
  return out;
}

SmoothnessReport smoothness_profile(const GridSet& grid, const GlobalBasis& es_basis, const GlobalBasis& os_basis,
                                    const TensorBasis& basis, const PartitionOfUnity& g,
                                    const MultiplierSequence& mu, const GridValues& f) {
  SmoothnessReport out;
  const double norm = sup_norm(f, grid);
  std::vector<double> best, taus, errors, kf;
  std::optional<int> saturation;
  for (std::size_t n = 0; n < g.count(); ++n) {
    const int ni = static_cast<int>(n);
    const auto e = degree_of_approximation(grid, es_basis, os_basis, g, f, ni);
    best.push_back(e.value);
    if (!saturation && e.dimension == grid.size()) saturation = ni;
    taus.push_back(sup_norm(tau(basis, g, f, n), grid));
    const auto s = sigma(basis, g, f, ni);
    double err = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p) err = std::max(err, std::abs(f[p] - s[p]));
    errors.push_back(err);
    kf.push_back(k_functional(basis, g, mu, f, std::ldexp(1.0, -ni)));
  }
  const double tiny = 1e-10 * std::max(norm, 1.0);
  const int last = saturation.value_or(static_cast<int>(g.count()));
  for (int n = 0; n < last; ++n) {
    if (best[static_cast<std::size_t>(n)] <= tiny) {
      out.finite_band = true;
      out.band_limit = n;
      break;
    }
  }
  out.best_approx = fit_decay(best);
  out.tau_norms = fit_decay(taus);
  out.sigma_errors = fit_decay(errors);
  out.k_functional = fit_decay(kf);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* d : {&out.best_approx, &out.tau_norms, &out.sigma_errors, &out.k_functional}) {
    if (!d->usable) continue;
    lo = std::min(lo, d->gamma);
    hi = std::max(hi, d->gamma);
  }
  out.spread = hi >= lo ? hi - lo : 0.0;
  out.insufficient_resolution = !out.tau_norms.usable;
  return out;
}

GridValues power_law_signal(const TensorBasis& basis, double gamma, Rng& rng) {
  std::vector<double> c(basis.size(), 0.0);
  int top = 0;
  for (const auto& k : basis.index()) top = std::max(top, shell(k));
  for (int j = 0; j <= top; ++j) {
    std::vector<double> cj(c.size(), 0.0);
    bool any = false;
    for (std::size_t p = 0; p < c.size(); ++p) {
      if (shell(basis.index()[p]) != j) continue;
      cj[p] = rng.uniform(-1.0, 1.0);
      any = true;
    }
    if (!any) continue;
    const auto part = basis.synthesize(cj);
    double sup = 0.0;
    for (const double x : part) sup = std::max(sup, std::abs(x));
    if (sup == 0.0) continue;
    const double amp = std::pow(2.0, -gamma * j) / sup;
    for (std::size_t p = 0; p < c.size(); ++p) c[p] += amp * cj[p];
  }
  return basis.synthesize(c);
}

std::string smoothness_to_json(const SmoothnessReport& report) {
  auto fit = [](const DecayFit& d) {
    return nlohmann::json{{"sequence", d.sequence}, {"gamma", d.gamma}, {"used", d.used}, {"usable", d.usable}};
  };
  nlohmann::json j{{"best_approx", fit(report.best_approx)},
                   {"tau_norms", fit(report.tau_norms)},
                   {"sigma_errors", fit(report.sigma_errors)},
                   {"k_functional", fit(report.k_functional)},
                   {"spread", report.spread},
                   {"insufficient_resolution", report.insufficient_resolution},
                   {"finite_band", report.finite_band},
                   {"band_limit", report.band_limit ? nlohmann::json(*report.band_limit) : nlohmann::json(nullptr)}};
  return j.dump(2) + "\n";
}

}  // namespace ditree
