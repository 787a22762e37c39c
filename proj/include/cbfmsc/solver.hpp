#pragma once

// Augmented-Lagrangian alternating minimization for multi-view subspace
// clustering with a constrained bilinear factorization Z_i = U_i V
// (U_i^T U_i = I). The objective is
//
//   min  sum_i ||E_i||_{2,1} + lambda ||L||_*
//   s.t. X_i = X_i Z_i + E_i,  Z_i = U_i V,  V = L,  U_i^T U_i = I.
//
// Each update_* function below solves one block subproblem in closed form and
// mutates the state in place; solve() runs them in the fixed order
// V, L, then per view (E, U, Z, Y1, Y2), then Y3 and mu.

#include "cbfmsc/common.hpp"
#include "cbfmsc/multiview.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <functional>
#include <random>
#include <type_traits>
#include <vector>

namespace cbfmsc {

template <typename Scalar>
struct SolverConfig {
  Scalar lambda = Scalar(1);
  Index k = 0;  // factor dimension, c <= k < n; 0 is rejected by validate()
  Scalar rho = Scalar(1.9);
  Scalar mu0 = Scalar(1e-4);
  Scalar mu_max = Scalar(1e6);
  Scalar eps = Scalar(1e-6);
  int max_iter = 300;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument unless every field is in range for n samples.
  void validate(Index n) const;
};

template <typename Scalar>
struct SolverState {
  std::vector<MatrixX<Scalar>> Z;   // n x n per view
  std::vector<MatrixX<Scalar>> E;   // d_i x n per view
  std::vector<MatrixX<Scalar>> U;   // n x k per view, orthonormal columns
  MatrixX<Scalar> V;                // k x n shared encoding
  MatrixX<Scalar> L;                // k x n, carries the trace norm
  std::vector<MatrixX<Scalar>> Y1;  // d_i x n per view
  std::vector<MatrixX<Scalar>> Y2;  // n x n per view
  MatrixX<Scalar> Y3;               // k x n
  Scalar mu = Scalar(0);
  Scalar lambda = Scalar(0);
  Scalar rho = Scalar(1);
  Scalar mu_max = Scalar(0);
  // Continues the seeded stream used for Z initialization; only consumed if
  // V has to be re-seeded for a degenerate Procrustes step.
  std::mt19937_64 rng;

  Index view_count() const { return static_cast<Index>(Z.size()); }
};

template <typename Scalar>
struct Residuals {
  Scalar x_conv = Scalar(0);  // mean over views of ||X_i - X_i Z_i - E_i||_max
  Scalar z_conv = Scalar(0);  // mean over views of ||Z_i - U_i V||_max
  Scalar v_conv = Scalar(0);  // ||V - L||_max
  Scalar x_worst = Scalar(0);  // max over views of the X term
  Scalar z_worst = Scalar(0);  // max over views of the Z term

  /// Averaged and per-view conditions must all hold.
  bool below(Scalar eps) const {
    return x_conv < eps && z_conv < eps && v_conv < eps && x_worst < eps && z_worst < eps;
  }
};

template <typename Scalar>
struct SolverResult {
  MatrixX<Scalar> Z;                // consensus coefficients, n x n
  std::vector<MatrixX<Scalar>> Z_views;
  std::vector<MatrixX<Scalar>> U;
  MatrixX<Scalar> V;
  std::vector<Residuals<Scalar>> residual_history;
  int iterations = 0;
  bool converged = false;
};

/// Cholesky factor of (I + X^T X) for one view; iteration-invariant.
template <typename Scalar>
using GramFactor = Eigen::LLT<MatrixX<Scalar>>;

/// Called after each completed iteration with its 1-based index.
template <typename Scalar>
using IterationObserver = std::function<void(int, const SolverState<Scalar>&)>;

/// Zero U, V, L, E and multipliers; Z_i ~ N(0, 0.01^2) i.i.d. from config.seed;
/// mu = mu0.
template <typename Scalar>
SolverState<Scalar> init_state(const MultiViewData<Scalar>& data, const SolverConfig<Scalar>& config);

template <typename Scalar>
std::vector<GramFactor<Scalar>> factorize_gram(const MultiViewData<Scalar>& data);

template <typename Scalar>
void update_V(SolverState<Scalar>& state, const MultiViewData<Scalar>& data);

template <typename Scalar>
void update_L(SolverState<Scalar>& state);

template <typename Scalar>
void update_E(SolverState<Scalar>& state, const MultiViewData<Scalar>& data, Index view);

/// Procrustes step. If (Z_i + Y2_i/mu) V^T is identically zero, V is
/// perturbed with tiny seeded noise and the step retried once.
template <typename Scalar>
void update_U(SolverState<Scalar>& state, Index view);

template <typename Scalar>
void update_Z(SolverState<Scalar>& state, const MultiViewData<Scalar>& data, Index view,
              const GramFactor<Scalar>& gram);

/// Convenience overload that factorizes (I + X_i^T X_i) on the spot.
template <typename Scalar>
void update_Z(SolverState<Scalar>& state, const MultiViewData<Scalar>& data, Index view);

/// Y1_i and Y2_i ascent for one view.
template <typename Scalar>
void update_view_multipliers(SolverState<Scalar>& state, const MultiViewData<Scalar>& data,
                             Index view);

/// Y3 ascent followed by mu <- min(rho*mu, mu_max).
template <typename Scalar>
void update_shared_multiplier(SolverState<Scalar>& state);

/// All multiplier updates of one iteration, then the mu step.
template <typename Scalar>
void update_multipliers(SolverState<Scalar>& state, const MultiViewData<Scalar>& data);

template <typename Scalar>
Residuals<Scalar> residuals(const SolverState<Scalar>& state, const MultiViewData<Scalar>& data);

/// (1/v) sum_i U_i V.
template <typename Scalar>
MatrixX<Scalar> consensus_Z(const SolverState<Scalar>& state);

/// One full iteration in the fixed update order.
template <typename Scalar>
void iterate(SolverState<Scalar>& state, const MultiViewData<Scalar>& data,
             const std::vector<GramFactor<Scalar>>& gram);

/// Runs to convergence or max_iter. Non-convergence is reported through
/// SolverResult::converged, not an exception.
template <typename Scalar>
SolverResult<Scalar> solve(const MultiViewData<Scalar>& data, const SolverConfig<Scalar>& config,
                           const std::type_identity_t<IterationObserver<Scalar>>& observer = {});

extern template struct SolverConfig<double>;
extern template SolverState<double> init_state(const MultiViewData<double>&,
                                               const SolverConfig<double>&);
extern template std::vector<GramFactor<double>> factorize_gram(const MultiViewData<double>&);
extern template void update_V(SolverState<double>&, const MultiViewData<double>&);
extern template void update_L(SolverState<double>&);
extern template void update_E(SolverState<double>&, const MultiViewData<double>&, Index);
extern template void update_U(SolverState<double>&, Index);
extern template void update_Z(SolverState<double>&, const MultiViewData<double>&, Index,
                              const GramFactor<double>&);
extern template void update_Z(SolverState<double>&, const MultiViewData<double>&, Index);
extern template void update_view_multipliers(SolverState<double>&, const MultiViewData<double>&,
                                             Index);
extern template void update_shared_multiplier(SolverState<double>&);
extern template void update_multipliers(SolverState<double>&, const MultiViewData<double>&);
extern template Residuals<double> residuals(const SolverState<double>&,
                                            const MultiViewData<double>&);
extern template MatrixX<double> consensus_Z(const SolverState<double>&);
extern template void iterate(SolverState<double>&, const MultiViewData<double>&,
                             const std::vector<GramFactor<double>>&);
extern template SolverResult<double> solve(const MultiViewData<double>&,
                                           const SolverConfig<double>&,
                                           const IterationObserver<double>&);

}  // namespace cbfmsc
