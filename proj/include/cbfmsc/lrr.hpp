#pragma once

// Single-view low-rank representation:
//
//   min ||E||_{2,1} + lambda ||Z||_*   s.t. X = X Z + E
//
// solved by inexact ALM with the split Z = J (J carries the trace norm). It
// shares the penalty schedule (mu0, rho, mu_max), stopping tolerance and Z
// initialization of the multi-view solver.

#include "cbfmsc/common.hpp"
#include "cbfmsc/solver.hpp"

#include <vector>

namespace cbfmsc {

template <typename Scalar>
struct LrrResult {
  MatrixX<Scalar> Z;
  MatrixX<Scalar> E;
  // Per iteration: ||X - XZ - E||_max and ||Z - J||_max.
  std::vector<std::pair<Scalar, Scalar>> residual_history;
  int iterations = 0;
  bool converged = false;
};

/// Only lambda, the mu schedule, eps, max_iter and seed are read from config;
/// k is ignored.
template <typename Scalar>
LrrResult<Scalar> lrr_solve(const MatrixX<Scalar>& x, Scalar lambda, const SolverConfig<Scalar>& config);

extern template LrrResult<double> lrr_solve(const MatrixX<double>&, double, const SolverConfig<double>&);

}  // namespace cbfmsc
