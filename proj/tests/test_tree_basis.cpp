#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ditree/error.hpp"
#include "ditree/tree_basis.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ditree;

namespace {

std::vector<double> random_simplex(Rng& rng, std::size_t m) {
  std::vector<double> p(m);
  double s = 0.0;
  for (auto& x : p) {
    x = -std::log(1.0 - rng.uniform()) + 1e-3;
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

std::vector<Rational> random_rational_simplex(Rng& rng, std::size_t m) {
  std::vector<Rational> p(m);
  Rational s = 0;
  for (auto& x : p) {
    x = static_cast<long>(1 + rng.below(50));
    s += x;
  }
  for (auto& x : p) {
    x /= s;
    x.canonicalize();
  }
  return p;
}

Filtration star_filtration(const std::vector<Rational>& p) {
  fixture::Shape s{"root", {}};
  for (std::size_t i = 0; i < p.size(); ++i) s.kids.push_back({});
  const auto tree = fixture::tree_from_shape(s).tree;
  auto wt = assign_weights(tree, WeightScheme::kUniformLeaves);
  for (std::size_t i = 0; i < p.size(); ++i) wt.weight[tree.node(0).children[i]] = p[i];
  return build_filtration(wt);
}

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> f(n);
  for (auto& x : f) x = rng.uniform(-1.0, 1.0);
  return f;
}

// The basis evaluated on the leaf cells, columns psi_0..psi_n.
Eigen::MatrixXd basis_matrix(const GlobalBasis& basis, std::size_t n) {
  Eigen::MatrixXd b(static_cast<Eigen::Index>(basis.num_leaves()), static_cast<Eigen::Index>(n + 1));
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < basis.num_leaves(); ++i) {
      b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = basis.value(k, i);
    }
  }
  return b;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(PiecewiseConstant, EvaluationAndIntegral) {
  const PiecewiseConstant f{{0.0, 0.5, 1.0}, {2.0, -1.0}};
  EXPECT_EQ(f(0.0), 2.0);
  EXPECT_EQ(f(0.5), -1.0);
  EXPECT_EQ(f(1.0), 0.0);
  EXPECT_EQ(f.sup_norm(), 2.0);
  const PiecewiseConstant g{{0.0, 0.25, 1.0}, {1.0, 4.0}};
  // 2*1*0.25 + 2*4*0.25 - 1*4*0.5
  EXPECT_DOUBLE_EQ(PiecewiseConstant::integral_product(f, g), 0.5);
  EXPECT_THROW((PiecewiseConstant{{0.0, 0.0, 1.0}, {1.0, 1.0}}.validate()), InvalidArgument);
  EXPECT_THROW((PiecewiseConstant{{0.0, 1.0}, {1.0, 1.0}}.validate()), InvalidArgument);
  EXPECT_EQ(f.to_csv(), "x0,x1,value\n0,0.5,2\n0.5,1,-1\n");
}

TEST(LocalBasis, HandValuesForThreeChildren) {
  const LocalBasis<Rational> b(0, {Rational(1, 2), Rational(3, 10), Rational(1, 5)});
  EXPECT_EQ(b.phi(1, Rational(1, 4)), Rational(3, 10));
  EXPECT_EQ(b.phi(1, Rational(6, 10)), Rational(-1, 2));
  EXPECT_EQ(b.phi(1, Rational(9, 10)), 0);
  EXPECT_EQ(b.norm2(1), Rational(3, 25));  // 0.3 * 0.5 * 0.8
  for (const auto x : {Rational(0), Rational(1, 2), Rational(99, 100)}) EXPECT_EQ(b.phi(0, x), 1);
  EXPECT_EQ(b.phi(0, Rational(1)), 0);
  EXPECT_EQ(b.phi(2, Rational(1, 4)), Rational(1, 5));
  EXPECT_EQ(b.phi(2, Rational(9, 10)), Rational(-4, 5));
}

TEST(LocalBasis, IdentitiesExactInRationalArithmetic) {
  const LocalBasis<Rational> b(0, {Rational(1, 2), Rational(3, 10), Rational(1, 5)});
  EXPECT_EQ(verify_local_identities(b).max(), 0.0);
  const LocalBasis<double> d(0.0, {0.5, 0.3, 0.2});
  EXPECT_LE(verify_local_identities(d).max(), 1e-12);
}

TEST(LocalBasis, TwoEqualChildren) {
  const LocalBasis<Rational> b(0, {Rational(1, 2), Rational(1, 2)});
  EXPECT_EQ(b.norm2(1), Rational(1, 4));
  EXPECT_EQ(verify_local_identities(b).max(), 0.0);
}

TEST(LocalBasis, RandomSimplexWeights) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng.below(7);
    const LocalBasis<double> d(rng.uniform(), random_simplex(rng, m));
    EXPECT_LE(verify_local_identities(d).max(), 1e-12) << "trial " << trial;
    const LocalBasis<Rational> r(Rational(static_cast<long>(rng.below(7)), 7), random_rational_simplex(rng, m));
    EXPECT_EQ(verify_local_identities(r).max(), 0.0) << "trial " << trial;
  }
}

TEST(LocalBasis, OrthogonalityByIndependentStepIntegration) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng.below(7);
    const double a = rng.uniform();
    const LocalBasis<double> b(a, random_simplex(rng, m));
    std::vector<double> edges{a};
    for (const double p : b.p()) edges.push_back(edges.back() + p);
    auto step = [&](std::size_t k) {
      std::vector<double> v(m);
      for (std::size_t j = 0; j < m; ++j) v[j] = b.phi(k, 0.5 * (edges[j] + edges[j + 1]));
      return PiecewiseConstant{edges, v};
    };
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t l = 0; l < m; ++l) {
        const double expect = k == l ? b.norm2(k) : 0.0;
        EXPECT_NEAR(PiecewiseConstant::integral_product(step(k), step(l)), expect, 1e-12);
      }
    }
  }
}

TEST(LocalBasis, RejectsDegenerateInput) {
  EXPECT_THROW(LocalBasis<double>(0.0, {1.0}), InvalidArgument);
  EXPECT_THROW(LocalBasis<double>(0.0, {0.5, 0.0, 0.5}), InvalidArgument);
}

TEST(GlobalBasis, AlephOfSecondChild) {
  const GlobalBasis basis(star_filtration({Rational(1, 2), Rational(3, 10), Rational(1, 5)}));
  ASSERT_EQ(basis.size(), 3u);
  EXPECT_EQ(basis.atom(1).aleph_exact, Rational(25, 3));  // 1 / 0.12
  EXPECT_EQ(basis.inner_exact(1, 1), Rational(3, 25));
  EXPECT_EQ(basis.inner_exact(0, 0), 1);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(basis.value(0, i), 1.0);
  // psi_1 = phi_1 / |v| with |v| = 1.
  EXPECT_DOUBLE_EQ(basis.value(1, 0), 0.3);
  EXPECT_DOUBLE_EQ(basis.value(1, 1), -0.5);
  EXPECT_EQ(basis.value(1, 2), 0.0);
}

TEST(GlobalBasis, ExactOrthogonalityAndClosedForm) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GlobalBasis basis(fixture::random_filtration(seed, 3, 5));
    const auto& f = basis.filtration();
    for (std::size_t n = 0; n < basis.size(); ++n) {
      if (n > 0) {
        const auto& e = basis.llo()[n];
        const auto& u = f.node(e.node);
        const auto& v = f.node(e.parent);
        const Rational closed = (u.b - u.a) * (u.a - v.a) * (u.b - v.a) / ((v.b - v.a) * (v.b - v.a));
        EXPECT_EQ(basis.inner_exact(n, n), closed);
      }
      for (std::size_t m = 0; m < basis.size(); ++m) {
        const Rational expect = n == m ? Rational(1 / basis.atom(n).aleph_exact) : Rational(0);
        ASSERT_EQ(basis.inner_exact(n, m), expect) << seed << ": " << n << "," << m;
        const double num = PiecewiseConstant::integral_product(basis.psi(n), basis.psi(m));
        EXPECT_NEAR(num, expect.get_d(), 1e-12);
      }
    }
  }
}

TEST(GlobalBasis, SupportsSitInsideParentInterval) {
  const GlobalBasis basis(fixture::random_filtration(3, 4, 4));
  const auto& f = basis.filtration();
  for (std::size_t n = 1; n < basis.size(); ++n) {
    const auto& v = f.node(basis.llo()[n].parent);
    const auto vals = basis.leaf_values(n);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i < v.leaf_lo || i >= v.leaf_hi) EXPECT_EQ(vals[i], 0.0);
    }
  }
}

TEST(Analysis, UnitCoefficientForBasisFunction) {
  const GlobalBasis basis(fixture::random_filtration(7, 3, 4));
  ASSERT_GT(basis.size(), 3u);
  const auto c = analyze(basis, basis.psi(3));
  for (std::size_t k = 0; k < c.size(); ++k) EXPECT_NEAR(c[k], k == 3 ? 1.0 : 0.0, 1e-12);
  const auto c0 = analyze(basis, LeafValues(basis.num_leaves(), 2.5));
  EXPECT_NEAR(c0[0], 2.5, 1e-12);
  for (std::size_t k = 1; k < c0.size(); ++k) EXPECT_NEAR(c0[k], 0.0, 1e-12);
}

TEST(Analysis, RoundTripMatchesGramSystem) {
  Rng rng(25);
  for (int trial = 0; trial < 5; ++trial) {
    // A 25-leaf filtration.
    fixture::Shape s;
    for (int i = 0; i < 5; ++i) s.kids.push_back({"", std::vector<fixture::Shape>(5)});
    const auto tree = fixture::tree_from_shape(s).tree;
    const GlobalBasis basis(build_filtration(fixture::random_weights(tree, rng)));
    ASSERT_EQ(basis.size(), 25u);
    const auto f = random_values(rng, 25);
    const auto c = analyze(basis, f);
    EXPECT_LE(sup_diff(synthesize(basis, c), f), 1e-10);

    const Eigen::MatrixXd b = basis_matrix(basis, 24);
    const Eigen::VectorXd mass = Eigen::Map<const Eigen::VectorXd>(basis.leaf_widths().data(), 25);
    const Eigen::VectorXd oracle = oracle::gram_solve(b, Eigen::Map<const Eigen::VectorXd>(f.data(), 25), mass);
    for (std::size_t k = 0; k < 25; ++k) EXPECT_NEAR(c[k], oracle(static_cast<Eigen::Index>(k)), 1e-9);
  }
}

TEST(Analysis, RejectsNonRefiningBreakpoints) {
  const GlobalBasis basis(star_filtration({Rational(1, 2), Rational(1, 4), Rational(1, 4)}));
  const PiecewiseConstant coarse{{0.0, 0.5, 1.0}, {1.0, 2.0}};
  EXPECT_NO_THROW(analyze(basis, coarse));
  const PiecewiseConstant off{{0.0, 0.3, 1.0}, {1.0, 2.0}};
  EXPECT_THROW(analyze(basis, off), InvalidArgument);
  const PiecewiseConstant short_domain{{0.0, 0.5}, {1.0}};
  EXPECT_THROW(analyze(basis, short_domain), InvalidArgument);
}

TEST(Variation, IndicatorAndZero) {
  // sup_n {|h_n| + sum_{k<n} |h_{k+1} - h_k|}: 1 + 0 on the support, 0 + 1 past it.
  EXPECT_EQ(variation_1d({1.0, 1.0, 1.0, 1.0}), 1.0);
  EXPECT_EQ(variation_1d({0.0, 0.0}), 0.0);
  EXPECT_EQ(variation_1d({}), 0.0);
  // 1 -> -1 -> 0: at n = 1, |-1| + 2 = 3; at n = 2, 0 + 3 = 3.
  EXPECT_EQ(variation_1d({1.0, -1.0}), 3.0);
  EXPECT_EQ(variation_1d({0.5, 1.0, 0.0}), 1.5);
}

TEST(FilteredSum, ZeroFilterAndBound) {
  Rng rng(3);
  const GlobalBasis basis(fixture::random_filtration(12, 4, 4));
  const std::size_t n = basis.size();
  for (const double x : filtered_sum(basis, std::vector<double>(n, 0.0), random_values(rng, basis.num_leaves()))) {
    EXPECT_EQ(x, 0.0);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_values(rng, basis.num_leaves());
    // Trapezoid: 1 on the first half, linear decay to 0.
    const std::size_t len = 1 + rng.below(n);
    std::vector<double> h(len);
    for (std::size_t k = 0; k < len; ++k) {
      h[k] = 2 * k < len ? 1.0 : 2.0 * static_cast<double>(len - k) / static_cast<double>(len + 1);
    }
    const double bound = 3.0 * variation_1d(h) * sup_norm(f);
    EXPECT_LE(sup_norm(filtered_sum(basis, h, f)), bound + 1e-12);
  }
}

TEST(Minimax, AgreesWithCircuitEnumeration) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 6 + static_cast<int>(rng.below(5));
    const int d = 1 + static_cast<int>(rng.below(3));
    Eigen::MatrixXd b(m, d);
    Eigen::VectorXd f(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < d; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
      f(i) = rng.uniform(-1.0, 1.0);
    }
    const auto r = chebyshev_fit(b, f);
    const double oracle = oracle::chebyshev_by_circuits(b, f);
    EXPECT_NEAR(r.value, oracle, 1e-9);
    EXPECT_NEAR(r.residual, oracle, 1e-9);
    EXPECT_NEAR((f - b * r.coefficients).cwiseAbs().maxCoeff(), r.residual, 1e-12);
  }
}

TEST(Minimax, LeafBasisAgreesWithCircuitEnumeration) {
  Rng rng(8);
  const GlobalBasis basis(fixture::random_filtration(4, 3, 3, 0.5));
  ASSERT_LE(basis.num_leaves(), 14u);
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = random_values(rng, basis.num_leaves());
    for (const std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{3}}) {
      if (n >= basis.size()) continue;
      const double oracle = oracle::chebyshev_by_circuits(
          basis_matrix(basis, n), Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())));
      EXPECT_NEAR(best_uniform_approx(basis, f, n).value, oracle, 1e-9);
    }
  }
}

TEST(Minimax, ZeroForMembersAndFullSpan) {
  Rng rng(9);
  const GlobalBasis basis(fixture::random_filtration(6, 3, 4));
  std::vector<double> c(4);
  for (auto& x : c) x = rng.uniform(-1.0, 1.0);
  EXPECT_NEAR(best_uniform_approx(basis, synthesize(basis, c), 3).value, 0.0, 1e-12);
  const auto f = random_values(rng, basis.num_leaves());
  const auto full = best_uniform_approx(basis, f, basis.size() - 1);
  EXPECT_NEAR(full.value, 0.0, 1e-12);
  EXPECT_NEAR(full.residual, 0.0, 1e-9);
}

TEST(PartialSums, BoundedAndNearBest) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const GlobalBasis basis(fixture::random_filtration(100 + trial, 3, 4));
    const auto f = random_values(rng, basis.num_leaves());
    const double fn = sup_norm(f);
    for (std::size_t n = 0; n < basis.size(); ++n) {
      const auto s = partial_sum(basis, f, n);
      EXPECT_LE(sup_norm(s), 6.0 * fn + 1e-12);
      const double en = best_uniform_approx(basis, f, n).value;
      const double err = sup_diff(f, s);
      EXPECT_LE(en, err + 1e-9);
      EXPECT_LE(err, 7.0 * en + 1e-9);
    }
  }
}

TEST(Operators, Linear) {
  Rng rng(23);
  const GlobalBasis basis(fixture::random_filtration(31, 4, 4));
  const auto f = random_values(rng, basis.num_leaves());
  const auto g = random_values(rng, basis.num_leaves());
  const double alpha = 1.7;
  const double beta = -0.4;
  std::vector<double> mix(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) mix[i] = alpha * f[i] + beta * g[i];
  auto combine = [&](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i] + beta * y[i];
    return out;
  };
  EXPECT_LE(sup_diff(analyze(basis, mix), combine(analyze(basis, f), analyze(basis, g))), 1e-12);
  const std::vector<double> h{1.0, 0.5, 0.25, 0.125};
  EXPECT_LE(sup_diff(filtered_sum(basis, h, mix), combine(filtered_sum(basis, h, f), filtered_sum(basis, h, g))),
            1e-12);
  EXPECT_LE(sup_diff(partial_sum(basis, mix, 2), combine(partial_sum(basis, f, 2), partial_sum(basis, g, 2))), 1e-12);
  const auto cf = analyze(basis, f);
  const auto cg = analyze(basis, g);
  EXPECT_LE(sup_diff(synthesize(basis, combine(cf, cg)), combine(synthesize(basis, cf), synthesize(basis, cg))),
            1e-12);
}

TEST(Export, CoefficientCsv) {
  const GlobalBasis basis(star_filtration({Rational(1, 2), Rational(3, 10), Rational(1, 5)}));
  const auto csv = coefficients_csv(basis, {1.0, 0.5, -0.25});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,llo_vertex,coefficient,aleph");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("\n0,0,1,1\n"), std::string::npos);
}
