#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace ditree {

struct MinimaxResult {
  double value = 0.0;         // optimum of the dual LP (lower bound on the error)
  double residual = 0.0;      // sup |f - B c| at the recovered coefficients
  Eigen::VectorXd coefficients;
  std::size_t pivots = 0;
};

/// Discrete Chebyshev approximation: min_c max_i |f_i - (B c)_i| with B of
/// size points x basis. Solved through the dual LP
///   max f'(u - v)  s.t.  B'(u - v) = 0,  1'(u + v) <= 1,  u, v >= 0
/// by a dense simplex (Dantzig pricing, Bland's rule once pivots stall); the
/// coefficients are the optimal dual prices. Throws ConvergenceError when the
/// pivot cap is reached.
MinimaxResult chebyshev_fit(const Eigen::MatrixXd& b, const Eigen::VectorXd& f);

}  // namespace ditree
