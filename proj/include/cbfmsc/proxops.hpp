#pragma once

// Closed-form single-step solvers shared by the ALM updates: scalar
// soft-thresholding, column-wise l2,1 shrinkage, singular value thresholding
// and the orthogonal Procrustes polar factor. Every function is pure and
// templated on the Eigen expression it receives; results are plain dense
// matrices of the same scalar type.

#include "cbfmsc/common.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace cbfmsc {

namespace detail {

template <typename Derived>
void require_nonempty(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw InvalidArgument(std::string(what) + ": empty matrix");
  }
}

template <typename Scalar>
using ThinSvd = Eigen::BDCSVD<MatrixX<Scalar>>;

template <typename Derived>
ThinSvd<typename Derived::Scalar> thin_svd(const Eigen::MatrixBase<Derived>& a) {
  ThinSvd<typename Derived::Scalar> svd(a.derived(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericFailure("SVD did not converge");
  }
  return svd;
}

}  // namespace detail

/// S_eps(x): shrink x toward zero by eps, clamping to zero inside [-eps, eps].
template <typename Scalar>
Scalar soft_threshold(Scalar x, Scalar eps) {
  if (!(eps >= Scalar(0))) {
    throw InvalidArgument("soft_threshold: eps must be nonnegative");
  }
  if (x - eps > Scalar(0)) return x - eps;
  if (x + eps < Scalar(0)) return x + eps;
  return Scalar(0);
}

/// Sum of column Euclidean norms.
template <typename Derived>
typename Derived::Scalar l21_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.colwise().norm().sum();
}

/// argmin_E tau*||E||_{2,1} + 1/2 ||E - T||_F^2.
///
/// Column j becomes (1 - tau/||t_j||) t_j when ||t_j|| > tau and zero
/// otherwise. The ALM call sites pass tau = 1/mu.
template <typename Derived>
MatrixX<typename Derived::Scalar> prox_l21(const Eigen::MatrixBase<Derived>& t,
                                           typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) {
    throw InvalidArgument("prox_l21: tau must be positive");
  }
  detail::require_nonempty(t, "prox_l21");
  require_finite(t, "prox_l21");

  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(t.rows(), t.cols());
  for (Index j = 0; j < t.cols(); ++j) {
    const Scalar norm = t.col(j).norm();
    if (norm > tau) {
      out.col(j) = ((norm - tau) / norm) * t.col(j);
    }
  }
  return out;
}

/// Singular value thresholding: U S_tau(Sigma) V^T, the proximal map of
/// tau*||.||_*.
template <typename Derived>
MatrixX<typename Derived::Scalar> svt(const Eigen::MatrixBase<Derived>& a,
                                      typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau >= Scalar(0))) {
    throw InvalidArgument("svt: tau must be nonnegative");
  }
  detail::require_nonempty(a, "svt");
  require_finite(a, "svt");

  const auto svd = detail::thin_svd(a);
  VectorX<Scalar> shrunk = svd.singularValues();
  Index kept = 0;
  for (Index i = 0; i < shrunk.size(); ++i) {
    shrunk(i) = soft_threshold(shrunk(i), tau);
    if (shrunk(i) > Scalar(0)) kept = i + 1;
  }
  // Singular values are sorted descending, so the surviving ones form a prefix.
  return svd.matrixU().leftCols(kept) * shrunk.head(kept).asDiagonal() *
         svd.matrixV().leftCols(kept).transpose();
}

/// Sum of singular values.
template <typename Derived>
typename Derived::Scalar trace_norm(const Eigen::MatrixBase<Derived>& a) {
  detail::require_nonempty(a, "trace_norm");
  require_finite(a, "trace_norm");
  Eigen::BDCSVD<MatrixX<typename Derived::Scalar>> svd(a.derived());
  if (svd.info() != Eigen::Success) {
    throw NumericFailure("trace_norm: SVD did not converge");
  }
  return svd.singularValues().sum();
}

/// Polar factor of M (n x k, n >= k): the orthonormal-column U maximizing
/// trace(U^T M), i.e. P Q^T from the thin SVD M = P Sigma Q^T.
///
/// Throws DegenerateInput for an all-zero M, where every orthonormal U is a
/// maximizer.
template <typename Derived>
MatrixX<typename Derived::Scalar> procrustes(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  detail::require_nonempty(m, "procrustes");
  require_finite(m, "procrustes");
  if (m.rows() < m.cols()) {
    throw InvalidArgument("procrustes: requires rows >= cols");
  }
  if (m.cwiseAbs().maxCoeff() == Scalar(0)) {
    throw DegenerateInput("procrustes: argument is identically zero");
  }
  const auto svd = detail::thin_svd(m);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace cbfmsc
