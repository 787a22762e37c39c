#include "cbfmsc/solver.hpp"

#include "cbfmsc/proxops.hpp"

#include <algorithm>
#include <string>

namespace cbfmsc {

namespace {

// Standard deviation of the random Z initialization.
constexpr double kZInitScale = 0.01;
// Standard deviation of the perturbation used to revive an all-zero V.
constexpr double kVReseedScale = 1e-6;

template <typename Scalar>
MatrixX<Scalar> gaussian(Index rows, Index cols, Scalar scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixX<Scalar> out(rows, cols);
  // Column-major fill order is part of the determinism contract.
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = scale * static_cast<Scalar>(normal(rng));
  }
  return out;
}

template <typename Scalar>
Scalar max_abs(const MatrixX<Scalar>& m) {
  return m.size() == 0 ? Scalar(0) : m.cwiseAbs().maxCoeff();
}

void check_view(Index view, Index count) {
  if (view < 0 || view >= count) {
    throw InvalidArgument("view index " + std::to_string(view) + " out of range");
  }
}

}  // namespace

template <typename Scalar>
void SolverConfig<Scalar>::validate(Index n) const {
  if (!(lambda > Scalar(0))) throw InvalidArgument("lambda must be positive");
  if (!(rho >= Scalar(1))) throw InvalidArgument("rho must be >= 1");
  if (!(mu0 > Scalar(0)) || !(mu0 <= mu_max)) {
    throw InvalidArgument("need 0 < mu0 <= mu_max");
  }
  if (!(eps > Scalar(0))) throw InvalidArgument("eps must be positive");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (k >= n) {
    throw InvalidArgument("k = " + std::to_string(k) + " must be smaller than n = " +
                          std::to_string(n));
  }
}

template <typename Scalar>
SolverState<Scalar> init_state(const MultiViewData<Scalar>& data, const SolverConfig<Scalar>& config) {
  data.validate();
  const Index n = data.samples();
  config.validate(n);
  const Index k = config.k;

  SolverState<Scalar> s;
  s.rng.seed(config.seed);
  s.mu = config.mu0;
  s.lambda = config.lambda;
  s.rho = config.rho;
  s.mu_max = config.mu_max;
  s.V = MatrixX<Scalar>::Zero(k, n);
  s.L = MatrixX<Scalar>::Zero(k, n);
  s.Y3 = MatrixX<Scalar>::Zero(k, n);
  for (const auto& x : data.views) {
    s.Z.push_back(gaussian<Scalar>(n, n, Scalar(kZInitScale), s.rng));
    s.E.push_back(MatrixX<Scalar>::Zero(x.rows(), n));
    s.U.push_back(MatrixX<Scalar>::Zero(n, k));
    s.Y1.push_back(MatrixX<Scalar>::Zero(x.rows(), n));
    s.Y2.push_back(MatrixX<Scalar>::Zero(n, n));
  }
  return s;
}

template <typename Scalar>
std::vector<GramFactor<Scalar>> factorize_gram(const MultiViewData<Scalar>& data) {
  std::vector<GramFactor<Scalar>> out;
  out.reserve(data.views.size());
  for (const auto& x : data.views) {
    MatrixX<Scalar> gram = x.transpose() * x;
    gram.diagonal().array() += Scalar(1);
    GramFactor<Scalar> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw NumericFailure("Cholesky factorization of I + X^T X failed");
    }
    out.push_back(std::move(llt));
  }
  return out;
}

template <typename Scalar>
void update_V(SolverState<Scalar>& s, const MultiViewData<Scalar>& /*data*/) {
  const Index k = s.V.rows();
  MatrixX<Scalar> lhs = MatrixX<Scalar>::Identity(k, k);
  MatrixX<Scalar> rhs = s.mu * s.L - s.Y3;
  for (Index i = 0; i < s.view_count(); ++i) {
    lhs.noalias() += s.U[i].transpose() * s.U[i];
    rhs.noalias() += s.U[i].transpose() * (s.Y2[i] + s.mu * s.Z[i]);
  }
  lhs *= s.mu;
  if (!lhs.allFinite() || !rhs.allFinite()) {
    throw NumericFailure("update_V: non-finite system");
  }
  Eigen::LLT<MatrixX<Scalar>> llt(lhs);
  if (llt.info() != Eigen::Success) throw NumericFailure("update_V: system not positive definite");
  s.V = llt.solve(rhs);
}

template <typename Scalar>
void update_L(SolverState<Scalar>& s) {
  if (!(s.mu > Scalar(0))) throw InvalidArgument("update_L: mu must be positive");
  s.L = svt(s.V + s.Y3 / s.mu, s.lambda / s.mu);
}

template <typename Scalar>
void update_E(SolverState<Scalar>& s, const MultiViewData<Scalar>& data, Index view) {
  check_view(view, s.view_count());
  if (!(s.mu > Scalar(0))) throw InvalidArgument("update_E: mu must be positive");
  const auto& x = data.views[view];
  MatrixX<Scalar> target = x - x * s.Z[view] + s.Y1[view] / s.mu;
  s.E[view] = prox_l21(target, Scalar(1) / s.mu);
}

template <typename Scalar>
void update_U(SolverState<Scalar>& s, Index view) {
  check_view(view, s.view_count());
  auto argument = [&] {
    return MatrixX<Scalar>((s.Z[view] + s.Y2[view] / s.mu) * s.V.transpose());
  };
  MatrixX<Scalar> m = argument();
  if (max_abs(m) == Scalar(0)) {
    s.V += gaussian<Scalar>(s.V.rows(), s.V.cols(), Scalar(kVReseedScale), s.rng);
    m = argument();
  }
  s.U[view] = procrustes(m);
}

template <typename Scalar>
void update_Z(SolverState<Scalar>& s, const MultiViewData<Scalar>& data, Index view,
              const GramFactor<Scalar>& gram) {
  check_view(view, s.view_count());
  if (!(s.mu > Scalar(0))) throw InvalidArgument("update_Z: mu must be positive");
  const auto& x = data.views[view];
  // T_ZB / mu; the mu in T_ZA = mu (I + X^T X) cancels.
  MatrixX<Scalar> rhs = s.U[view] * s.V - s.Y2[view] / s.mu;
  rhs.noalias() += x.transpose() * (s.Y1[view] / s.mu + x - s.E[view]);
  MatrixX<Scalar> z = gram.solve(rhs);
  if (!z.allFinite()) throw NumericFailure("update_Z: non-finite solution");
  s.Z[view] = std::move(z);
}

template <typename Scalar>
void update_Z(SolverState<Scalar>& s, const MultiViewData<Scalar>& data, Index view) {
  check_view(view, s.view_count());
  MultiViewData<Scalar> single({data.views[view]});
  update_Z(s, data, view, factorize_gram(single).front());
}

template <typename Scalar>
void update_view_multipliers(SolverState<Scalar>& s, const MultiViewData<Scalar>& data, Index view) {
  check_view(view, s.view_count());
  const auto& x = data.views[view];
  s.Y1[view] += s.mu * (x - x * s.Z[view] - s.E[view]);
  s.Y2[view] += s.mu * (s.Z[view] - s.U[view] * s.V);
}

template <typename Scalar>
void update_shared_multiplier(SolverState<Scalar>& s) {
  s.Y3 += s.mu * (s.V - s.L);
  s.mu = std::min(s.rho * s.mu, s.mu_max);
}

template <typename Scalar>
void update_multipliers(SolverState<Scalar>& s, const MultiViewData<Scalar>& data) {
  for (Index i = 0; i < s.view_count(); ++i) update_view_multipliers(s, data, i);
  update_shared_multiplier(s);
}

template <typename Scalar>
Residuals<Scalar> residuals(const SolverState<Scalar>& s, const MultiViewData<Scalar>& data) {
  Residuals<Scalar> r;
  const Index v = s.view_count();
  for (Index i = 0; i < v; ++i) {
    const auto& x = data.views[i];
    const Scalar xr = max_abs<Scalar>(x - x * s.Z[i] - s.E[i]);
    const Scalar zr = max_abs<Scalar>(s.Z[i] - s.U[i] * s.V);
    r.x_conv += xr;
    r.z_conv += zr;
    r.x_worst = std::max(r.x_worst, xr);
    r.z_worst = std::max(r.z_worst, zr);
  }
  r.x_conv /= Scalar(v);
  r.z_conv /= Scalar(v);
  r.v_conv = max_abs<Scalar>(s.V - s.L);
  return r;
}

template <typename Scalar>
MatrixX<Scalar> consensus_Z(const SolverState<Scalar>& s) {
  const Index n = s.V.cols();
  MatrixX<Scalar> z = MatrixX<Scalar>::Zero(n, n);
  for (const auto& u : s.U) z.noalias() += u * s.V;
  return z / Scalar(s.view_count());
}

template <typename Scalar>
void iterate(SolverState<Scalar>& s, const MultiViewData<Scalar>& data,
             const std::vector<GramFactor<Scalar>>& gram) {
  update_V(s, data);
  update_L(s);
  for (Index i = 0; i < s.view_count(); ++i) {
    update_E(s, data, i);
    update_U(s, i);
    update_Z(s, data, i, gram[i]);
    update_view_multipliers(s, data, i);
  }
  update_shared_multiplier(s);
}

template <typename Scalar>
SolverResult<Scalar> solve(const MultiViewData<Scalar>& data, const SolverConfig<Scalar>& config,
                           const std::type_identity_t<IterationObserver<Scalar>>& observer) {
  SolverState<Scalar> s = init_state(data, config);
  const auto gram = factorize_gram(data);

  SolverResult<Scalar> result;
  result.residual_history.reserve(static_cast<std::size_t>(config.max_iter));
  for (int it = 1; it <= config.max_iter; ++it) {
    iterate(s, data, gram);
    const auto r = residuals(s, data);
    result.residual_history.push_back(r);
    result.iterations = it;
    if (observer) observer(it, s);
    if (r.below(config.eps)) {
      result.converged = true;
      break;
    }
  }
  result.Z = consensus_Z(s);
  result.Z_views = std::move(s.Z);
  result.U = std::move(s.U);
  result.V = std::move(s.V);
  return result;
}

template struct SolverConfig<double>;
template SolverState<double> init_state(const MultiViewData<double>&, const SolverConfig<double>&);
template std::vector<GramFactor<double>> factorize_gram(const MultiViewData<double>&);
template void update_V(SolverState<double>&, const MultiViewData<double>&);
template void update_L(SolverState<double>&);
template void update_E(SolverState<double>&, const MultiViewData<double>&, Index);
template void update_U(SolverState<double>&, Index);
template void update_Z(SolverState<double>&, const MultiViewData<double>&, Index,
                       const GramFactor<double>&);
template void update_Z(SolverState<double>&, const MultiViewData<double>&, Index);
template void update_view_multipliers(SolverState<double>&, const MultiViewData<double>&, Index);
template void update_shared_multiplier(SolverState<double>&);
template void update_multipliers(SolverState<double>&, const MultiViewData<double>&);
template Residuals<double> residuals(const SolverState<double>&, const MultiViewData<double>&);
template MatrixX<double> consensus_Z(const SolverState<double>&);
template void iterate(SolverState<double>&, const MultiViewData<double>&,
                      const std::vector<GramFactor<double>>&);
template SolverResult<double> solve(const MultiViewData<double>&, const SolverConfig<double>&,
                                    const IterationObserver<double>&);

}  // namespace cbfmsc
