/**
 * @file cp.hpp
 * @brief CP decomposition: objective, gradient, ALS sweeps (forward and
 *        forward-backward) and the flattened-variable problem adapter used
 *        by the accelerated drivers.
 *
 * A rank-R CP model of an order-N tensor is the factor tuple
 * [[A^(1),...,A^(N)]], A^(n) of size I_n x R.  The objective is
 * f = 1/2 ||X - full([[A]])||_F^2, evaluated without forming the full
 * residual via the Gram/MTTKRP expansion.
 */
#pragma once

#include <vector>

#include "accel/driver.hpp"
#include "accel/tensor.hpp"

namespace accel {

/// CP factor tuple.
struct KTensor {
  std::vector<MatrixXd> factors;

  int rank() const { return factors.empty() ? 0 : static_cast<int>(factors[0].cols()); }
  std::size_t order() const { return factors.size(); }
};

/// Flatten factors into one vector (each factor column-major, concatenated).
inline VectorXd cp_vec(const std::vector<MatrixXd>& A) {
  Eigen::Index total = 0;
  for (const auto& a : A) total += a.size();
  VectorXd v(total);
  Eigen::Index off = 0;
  for (const auto& a : A) {
    v.segment(off, a.size()) = Eigen::Map<const VectorXd>(a.data(), a.size());
    off += a.size();
  }
  return v;
}

inline std::vector<MatrixXd> cp_unvec(const VectorXd& v,
                                      const std::vector<std::pair<Eigen::Index, Eigen::Index>>& shapes) {
  std::vector<MatrixXd> A;
  A.reserve(shapes.size());
  Eigen::Index off = 0;
  for (auto [r, c] : shapes) {
    A.push_back(Eigen::Map<const MatrixXd>(v.data() + off, r, c));
    off += r * c;
  }
  return A;
}

/// Khatri-Rao chain A^(N) kr ... kr A^(1) skipping mode n (matches the
/// mode-n matricization identity under the first-index-fastest convention).
inline MatrixXd cp_kr_chain(const std::vector<MatrixXd>& A, std::size_t n) {
  MatrixXd K;
  bool first = true;
  for (std::size_t m = A.size(); m-- > 0;) {
    if (m == n) continue;
    if (first) { K = A[m]; first = false; }
    else K = khatri_rao(K, A[m]);
  }
  return K;
}

/// Matricized tensor times Khatri-Rao product: X_(n) * (kr chain skip n).
inline MatrixXd mttkrp(const DenseTensor& X, const std::vector<MatrixXd>& A,
                       std::size_t n) {
  return matricize(X, n) * cp_kr_chain(A, n);
}

/// Gamma^(n) = hadamard of all A^(m)'A^(m), m != n.
inline MatrixXd cp_gamma(const std::vector<MatrixXd>& A, std::size_t n) {
  const Eigen::Index R = A[0].cols();
  MatrixXd G = MatrixXd::Ones(R, R);
  for (std::size_t m = 0; m < A.size(); ++m)
    if (m != n) G = G.cwiseProduct(MatrixXd(A[m].transpose() * A[m]));
  return G;
}

/// Reconstruct the full tensor from factors.
inline DenseTensor cp_full(const KTensor& kt, const std::vector<std::size_t>& shape) {
  const MatrixXd X0 = kt.factors[0] * cp_kr_chain(kt.factors, 0).transpose();
  return tensorize(X0, shape, 0);
}

/// f = 1/2||X||^2 - <A^(1), M^(1)> + 1/2 <A^(1)'A^(1), Gamma^(1)>.
inline double cp_objective(const DenseTensor& X, const std::vector<MatrixXd>& A,
                           double normX2) {
  const MatrixXd M = mttkrp(X, A, 0);
  const MatrixXd G = cp_gamma(A, 0);
  return 0.5 * normX2 - (A[0].cwiseProduct(M)).sum() +
         0.5 * (MatrixXd(A[0].transpose() * A[0]).cwiseProduct(G)).sum();
}

/// Gradient blocks dF/dA^(n) = -M^(n) + A^(n) Gamma^(n).
inline std::vector<MatrixXd> cp_gradient(const DenseTensor& X,
                                         const std::vector<MatrixXd>& A) {
  std::vector<MatrixXd> G;
  G.reserve(A.size());
  for (std::size_t n = 0; n < A.size(); ++n)
    G.push_back(-mttkrp(X, A, n) + A[n] * cp_gamma(A, n));
  return G;
}

/// One ALS sweep.  Forward: n = 1..N.  Forward-backward appends N-1..1.
/// Each subproblem is A^(n) = M^(n) (Gamma^(n))^+, the exact least-squares
/// solution for that block.
inline std::vector<MatrixXd> cp_als_sweep(const DenseTensor& X,
                                          std::vector<MatrixXd> A,
                                          bool forward_backward = false) {
  const std::size_t N = A.size();
  std::vector<std::size_t> sched;
  for (std::size_t n = 0; n < N; ++n) sched.push_back(n);
  if (forward_backward)
    for (std::size_t n = N - 1; n-- > 0;) sched.push_back(n);
  for (std::size_t n : sched)
    A[n] = mttkrp(X, A, n) * pinv(cp_gamma(A, n));
  return A;
}

/// Adapter: NonlinearProblem over the flattened factor variable.
/// Termination metric is ||g|| / numel(x) (numel = sum I_n * R).
inline NonlinearProblem make_cp_problem(const DenseTensor& X,
                                        const std::vector<std::pair<Eigen::Index, Eigen::Index>>& shapes,
                                        bool forward_backward_sweep = false) {
  const double normX2 = X.frob_norm() * X.frob_norm();
  double numel = 0;
  for (auto [r, c] : shapes) numel += static_cast<double>(r * c);
  NonlinearProblem p;
  p.f = [&X, shapes, normX2](const VectorXd& v) {
    return cp_objective(X, cp_unvec(v, shapes), normX2);
  };
  p.g = [&X, shapes](const VectorXd& v) {
    return cp_vec(cp_gradient(X, cp_unvec(v, shapes)));
  };
  p.q_sweep = [&X, shapes, forward_backward_sweep](const VectorXd& v) {
    return cp_vec(cp_als_sweep(X, cp_unvec(v, shapes), forward_backward_sweep));
  };
  p.scaled_norm = [numel](double, const VectorXd& g) { return g.norm() / numel; };
  return p;
}

}  // namespace accel
