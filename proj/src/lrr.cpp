#include "cbfmsc/lrr.hpp"

#include "cbfmsc/proxops.hpp"

#include <algorithm>
#include <random>

namespace cbfmsc {

template <typename Scalar>
LrrResult<Scalar> lrr_solve(const MatrixX<Scalar>& x, Scalar lambda, const SolverConfig<Scalar>& config) {
  if (!(lambda > Scalar(0))) throw InvalidArgument("lrr_solve: lambda must be positive");
  MultiViewData<Scalar> data({x});
  data.validate();
  const Index n = x.cols();

  // Reuse the multi-view initialization so both methods see the same Z draw.
  SolverConfig<Scalar> init_config = config;
  init_config.lambda = lambda;
  init_config.k = 1;
  if (n < 2) throw InvalidArgument("lrr_solve: need at least two samples");
  auto init = init_state(data, init_config);

  MatrixX<Scalar> z = std::move(init.Z.front());
  MatrixX<Scalar> j = MatrixX<Scalar>::Zero(n, n);
  MatrixX<Scalar> e = MatrixX<Scalar>::Zero(x.rows(), n);
  MatrixX<Scalar> y1 = MatrixX<Scalar>::Zero(x.rows(), n);
  MatrixX<Scalar> y2 = MatrixX<Scalar>::Zero(n, n);
  Scalar mu = config.mu0;

  const auto gram = factorize_gram(data).front();
  const MatrixX<Scalar> xtx = x.transpose() * x;

  LrrResult<Scalar> result;
  for (int it = 1; it <= config.max_iter; ++it) {
    j = svt(z + y2 / mu, lambda / mu);
    e = prox_l21(x - x * z + y1 / mu, Scalar(1) / mu);
    MatrixX<Scalar> rhs = xtx - x.transpose() * e + j + (x.transpose() * y1 - y2) / mu;
    z = gram.solve(rhs);
    if (!z.allFinite()) throw NumericFailure("lrr_solve: non-finite iterate");

    const MatrixX<Scalar> fit = x - x * z - e;
    const MatrixX<Scalar> split = z - j;
    y1 += mu * fit;
    y2 += mu * split;
    mu = std::min(config.rho * mu, config.mu_max);

    const Scalar fit_res = fit.cwiseAbs().maxCoeff();
    const Scalar split_res = split.cwiseAbs().maxCoeff();
    result.residual_history.emplace_back(fit_res, split_res);
    result.iterations = it;
    if (fit_res < config.eps && split_res < config.eps) {
      result.converged = true;
      break;
    }
  }
  result.Z = std::move(z);
  result.E = std::move(e);
  return result;
}

template LrrResult<double> lrr_solve(const MatrixX<double>&, double, const SolverConfig<double>&);

}  // namespace cbfmsc
