#include "ditree/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ditree/error.hpp"

namespace ditree {

namespace {

constexpr double kReducedCostTolerance = 1e-11;
constexpr double kPivotEntry = 1e-9;
constexpr std::size_t kStallBeforeBland = 50;
constexpr double kPerturbation = 1e-9;

}  // namespace

MinimaxResult chebyshev_fit(const Eigen::MatrixXd& b, const Eigen::VectorXd& f) {
  const Eigen::Index points = b.rows();
  const Eigen::Index d = b.cols();
  if (f.size() != points) throw InvalidArgument("chebyshev_fit: value count does not match basis rows");
  MinimaxResult out;
  out.coefficients = Eigen::VectorXd::Zero(d);
  const double scale = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (points == 0 || scale == 0.0) return out;
  if (d == 0) {
    out.value = out.residual = scale;
    return out;
  }

  // Rows: B'(u-v) <= 0, -B'(u-v) <= 0, 1'(u+v) <= 1. Columns: u, v, slacks.
  const Eigen::Index rows = 2 * d + 1;
  const Eigen::Index vars = 2 * points;
  const Eigen::Index cols = vars + rows;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
  const Eigen::MatrixXd bt = b.transpose();
  a.block(0, 0, d, points) = bt;
  a.block(0, points, d, points) = -bt;
  a.block(d, 0, d, points) = -bt;
  a.block(d, points, d, points) = bt;
  a.block(2 * d, 0, 1, vars).setOnes();
  a.block(0, vars, rows, rows).setIdentity();
  Eigen::VectorXd exact_rhs = Eigen::VectorXd::Zero(rows);
  exact_rhs(2 * d) = 1.0;
  // The zero right-hand sides make the start massively degenerate; a fixed
  // tiny perturbation lets Dantzig pricing move. The final basis is then
  // re-evaluated on the exact data.
  Eigen::VectorXd rhs = exact_rhs;
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (Eigen::Index r = 0; r < 2 * d; ++r) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    rhs(r) = kPerturbation * (1.0 + static_cast<double>(state >> 11) * 0x1.0p-53);
  }
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  const Eigen::VectorXd fs = f / scale;
  cost.head(points) = fs;
  cost.segment(points, points) = -fs;

  // Revised simplex; the basis is refactored every pivot so rounding never accumulates.
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  std::vector<char> in_basis(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    basis[static_cast<std::size_t>(r)] = vars + r;
    in_basis[static_cast<std::size_t>(vars + r)] = 1;
  }
  const std::size_t cap = 50 * static_cast<std::size_t>(cols) + 1000;
  std::size_t stall = 0;
  Eigen::MatrixXd bm(rows, rows);
  Eigen::VectorXd cb(rows);
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  for (;;) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      bm.col(r) = a.col(basis[static_cast<std::size_t>(r)]);
      cb(r) = cost(basis[static_cast<std::size_t>(r)]);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bm);
    x = lu.solve(rhs);
    y = lu.transpose().solve(cb);

    const bool bland = stall >= kStallBeforeBland;
    Eigen::Index enter = -1;
    double best = kReducedCostTolerance;
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (in_basis[static_cast<std::size_t>(c)]) continue;
      const double gain = cost(c) - y.dot(a.col(c));
      if (gain > best) {
        enter = c;
        if (bland) break;
        best = gain;
      }
    }
    if (enter < 0) break;
    const Eigen::VectorXd dir = lu.solve(a.col(enter));
    Eigen::Index leave = -1;
    double ratio = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (dir(r) <= kPivotEntry) continue;
      const double q = std::max(x(r), 0.0) / dir(r);
      if (leave < 0 || q < ratio - 1e-12 ||
          (q <= ratio + 1e-12 && basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
        leave = r;
        ratio = q;
      }
    }
    // The dual feasible region is bounded by 1'(u+v) <= 1.
    if (leave < 0) throw Error("chebyshev_fit: unbounded dual, which cannot happen for finite data");
    if (++out.pivots > cap) throw ConvergenceError("chebyshev_fit: pivot cap reached", cb.dot(x) * scale);
    // Bland's rule stays on once degeneracy has stalled Dantzig pricing.
    if (stall < kStallBeforeBland) stall = ratio <= 1e-12 ? stall + 1 : 0;
    in_basis[static_cast<std::size_t>(basis[static_cast<std::size_t>(leave)])] = 0;
    in_basis[static_cast<std::size_t>(enter)] = 1;
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  Eigen::VectorXd xe(rows);
  {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bm);
    xe = lu.solve(exact_rhs);
  }
  out.value = (xe.minCoeff() >= -1e-12 ? cb.dot(xe) : cb.dot(x)) * scale;
  // Dual prices of the two B' row blocks give the primal coefficients.
  out.coefficients = (y.head(d) - y.segment(d, d)) * scale;
  out.residual = (f - b * out.coefficients).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace ditree
