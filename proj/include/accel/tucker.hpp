/**
 * @file tucker.hpp
 * @brief Tucker/HOSVD model: objective, Euclidean and Riemannian gradients,
 *        HOOI sweeps and the truncated HOSVD initial guess.
 *
 * Minimization form: f(A^(1),...,A^(N)) = -1/2 ||(A^(1)',...,A^(N)')·X||_F^2
 * over columnwise-orthonormal factors; the core S is recovered afterwards as
 * the projected tensor.  Objective values are negative by construction.
 */
#pragma once

#include <vector>

#include "accel/tensor.hpp"

namespace accel {

struct TuckerTensor {
  DenseTensor core;
  std::vector<MatrixXd> factors;
};

inline void check_orthonormal(const std::vector<MatrixXd>& A, double tol = 1e-10) {
  for (const auto& a : A) {
    const MatrixXd e = a.transpose() * a - MatrixXd::Identity(a.cols(), a.cols());
    if (e.norm() > tol)
      throw std::invalid_argument("tucker: factor not columnwise orthonormal");
  }
}

/// Projected tensor (A^(1)',...,A^(N)')·X (the core for given factors).
inline DenseTensor tucker_core(const DenseTensor& X, const std::vector<MatrixXd>& A) {
  DenseTensor out = X;
  for (std::size_t n = 0; n < A.size(); ++n)
    out = mode_n_product(out, MatrixXd(A[n].transpose()), n);
  return out;
}

/// Y^(n) = X with A^(m)' applied in every mode m != n (identity in slot n).
inline DenseTensor tucker_partial_core(const DenseTensor& X,
                                       const std::vector<MatrixXd>& A,
                                       std::size_t n) {
  DenseTensor out = X;
  for (std::size_t m = 0; m < A.size(); ++m)
    if (m != n) out = mode_n_product(out, MatrixXd(A[m].transpose()), m);
  return out;
}

inline double tucker_objective(const DenseTensor& X, const std::vector<MatrixXd>& A) {
  const double c = tucker_core(X, A).frob_norm();
  return -0.5 * c * c;
}

/// Euclidean gradient block n: -Y_(n) Y_(n)' A^(n) with Y the partial core.
inline std::vector<MatrixXd> tucker_gradient(const DenseTensor& X,
                                             const std::vector<MatrixXd>& A) {
  std::vector<MatrixXd> G;
  G.reserve(A.size());
  for (std::size_t n = 0; n < A.size(); ++n) {
    const MatrixXd Yn = matricize(tucker_partial_core(X, A, n), n);
    G.push_back(-Yn * (Yn.transpose() * A[n]));
  }
  return G;
}

/// Riemannian gradient: blockwise horizontal projection (I - A A') of the
/// Euclidean gradient.
inline std::vector<MatrixXd> tucker_riemannian_gradient(const DenseTensor& X,
                                                        const std::vector<MatrixXd>& A) {
  std::vector<MatrixXd> G = tucker_gradient(X, A);
  for (std::size_t n = 0; n < A.size(); ++n)
    G[n] -= A[n] * (A[n].transpose() * G[n]);
  return G;
}

/// Leading r left singular vectors with deterministic sign convention
/// (largest-magnitude entry of each vector made positive).
inline MatrixXd leading_left_singular_vectors(const MatrixXd& M, Eigen::Index r) {
  Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeThinU);
  MatrixXd U = svd.matrixU().leftCols(r);
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    Eigen::Index imax = 0;
    U.col(j).cwiseAbs().maxCoeff(&imax);
    if (U(imax, j) < 0) U.col(j) = -U.col(j);
  }
  return U;
}

/// One HOOI sweep: each visited factor becomes the R_n leading left singular
/// vectors of the matricized partial core.  F visits 1..N; FB appends N-1..1.
inline std::vector<MatrixXd> hooi_sweep(const DenseTensor& X,
                                        std::vector<MatrixXd> A,
                                        bool forward_backward = false) {
  const std::size_t N = A.size();
  std::vector<std::size_t> sched;
  for (std::size_t n = 0; n < N; ++n) sched.push_back(n);
  if (forward_backward)
    for (std::size_t n = N - 1; n-- > 0;) sched.push_back(n);
  for (std::size_t n : sched) {
    const MatrixXd Yn = matricize(tucker_partial_core(X, A, n), n);
    A[n] = leading_left_singular_vectors(Yn, A[n].cols());
  }
  return A;
}

/// Truncated HOSVD: factors from leading singular vectors of each plain
/// matricization; core = projected tensor.  The standard initial guess.
inline TuckerTensor hosvd_truncate(const DenseTensor& X,
                                   const std::vector<std::size_t>& ranks) {
  if (ranks.size() != X.order())
    throw std::invalid_argument("hosvd: one rank per mode required");
  TuckerTensor t;
  t.factors.reserve(ranks.size());
  for (std::size_t n = 0; n < ranks.size(); ++n) {
    if (ranks[n] > X.extent(n))
      throw std::invalid_argument("hosvd: rank exceeds extent");
    t.factors.push_back(leading_left_singular_vectors(
        matricize(X, n), static_cast<Eigen::Index>(ranks[n])));
  }
  t.core = tucker_core(X, t.factors);
  return t;
}

}  // namespace accel
