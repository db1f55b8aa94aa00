/**
 * @file problems.hpp
 * @brief Synthetic problem instance generators: CP test tensors with exact
 *        factor collinearity plus two-stage noise, Tucker test tensors with
 *        random orthonormal factors plus the same noise, and the Tucker
 *        manifold problem adapter.
 *
 * Noise model (two stages, in order):
 *   stage 1 (homoskedastic):  X' = X  + sqrt(l1/(100-l1)) (||X|| /||N1||)      N1
 *   stage 2 (heteroskedastic): X''= X' + sqrt(l2/(100-l2)) (||X'||/||N2 .* X'||) N2 .* X'
 * with N1, N2 i.i.d. standard normal and .* elementwise.  l = 0 skips the stage.
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "accel/cp.hpp"
#include "accel/manifold_driver.hpp"
#include "accel/rng.hpp"
#include "accel/tensor.hpp"
#include "accel/tucker.hpp"

namespace accel {

namespace detail {

inline DenseTensor gaussian_tensor(std::mt19937_64& gen,
                                   const std::vector<std::size_t>& shape) {
  DenseTensor t(shape);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& v : t.data()) v = nd(gen);
  return t;
}

}  // namespace detail

/// Apply the two-stage noise model in place.  l1, l2 in [0, 100).
inline void add_two_stage_noise(DenseTensor& X, double l1, double l2,
                                std::uint64_t seed, std::uint64_t trial) {
  if (l1 < 0 || l1 >= 100 || l2 < 0 || l2 >= 100)
    throw std::invalid_argument("noise levels must lie in [0, 100)");
  if (l1 > 0) {
    auto g1 = make_stream(seed, trial, StreamPurpose::Noise1);
    DenseTensor N = detail::gaussian_tensor(g1, X.shape());
    const double c = std::sqrt(l1 / (100.0 - l1)) * X.frob_norm() / N.frob_norm();
    for (std::size_t i = 0; i < X.numel(); ++i) X.data()[i] += c * N.data()[i];
  }
  if (l2 > 0) {
    auto g2 = make_stream(seed, trial, StreamPurpose::Noise2);
    DenseTensor N = detail::gaussian_tensor(g2, X.shape());
    double nx2 = 0.0;
    for (std::size_t i = 0; i < X.numel(); ++i) {
      N.data()[i] *= X.data()[i];  // N2 .* X'
      nx2 += N.data()[i] * N.data()[i];
    }
    const double c = std::sqrt(l2 / (100.0 - l2)) * X.frob_norm() / std::sqrt(nx2);
    for (std::size_t i = 0; i < X.numel(); ++i) X.data()[i] += c * N.data()[i];
  }
}

struct CollinearCpSpec {
  std::size_t order = 3;
  std::size_t extent = 50;     ///< I (cubical tensor)
  int rank = 5;                ///< R
  double collinearity = 0.9;   ///< C, pairwise normalized inner product
  double l1 = 10.0;            ///< homoskedastic noise level
  double l2 = 1.0;             ///< heteroskedastic noise level
};

/// Ground-truth factors with exact pairwise column collinearity C:
/// A^(n) = U_n L' where U_n is random orthonormal and L is the Cholesky
/// factor of the R x R matrix with unit diagonal and C off-diagonal.
/// Columns have unit norm, so the collinearity equals C exactly.
inline std::pair<KTensor, DenseTensor> generate_collinear_cp(
    const CollinearCpSpec& spec, std::uint64_t seed, std::uint64_t trial) {
  if (spec.rank > static_cast<int>(spec.extent))
    throw std::invalid_argument("generate_collinear_cp: rank exceeds extent");
  const int R = spec.rank;
  MatrixXd gram = MatrixXd::Constant(R, R, spec.collinearity);
  gram.diagonal().setOnes();
  Eigen::LLT<MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "generate_collinear_cp: collinearity matrix is not positive definite");
  const MatrixXd L = llt.matrixL();

  auto gen = make_stream(seed, trial, StreamPurpose::Tensor);
  KTensor truth;
  truth.factors.reserve(spec.order);
  for (std::size_t n = 0; n < spec.order; ++n) {
    const MatrixXd U = random_orthonormal(gen, static_cast<int>(spec.extent), R);
    truth.factors.push_back(U * L.transpose());
  }
  std::vector<std::size_t> shape(spec.order, spec.extent);
  DenseTensor X = cp_full(truth, shape);
  add_two_stage_noise(X, spec.l1, spec.l2, seed, trial);
  return {std::move(truth), std::move(X)};
}

/// Random uniform-[0,1) CP initial guess (the customary random start for
/// ALS-type experiments; all-positive columns are mutually collinear, which
/// exposes the slow swamp regime).
inline std::vector<MatrixXd> random_cp_guess(std::size_t order, std::size_t extent,
                                             int rank, std::uint64_t seed,
                                             std::uint64_t trial) {
  auto gen = make_stream(seed, trial, StreamPurpose::Init);
  std::vector<MatrixXd> A;
  A.reserve(order);
  for (std::size_t n = 0; n < order; ++n)
    A.push_back(randu(gen, static_cast<int>(extent), rank));
  return A;
}

struct SyntheticTuckerSpec {
  std::vector<std::size_t> extents{60, 60, 60};
  std::vector<std::size_t> true_ranks{20, 20, 20};
  double l1 = 10.0;
  double l2 = 10.0;
};

/// Random core (standard-normal entries) x random orthonormal factors, then
/// the two-stage noise.
inline DenseTensor generate_synthetic_tucker(const SyntheticTuckerSpec& spec,
                                             std::uint64_t seed,
                                             std::uint64_t trial) {
  if (spec.true_ranks.size() != spec.extents.size())
    throw std::invalid_argument("generate_synthetic_tucker: rank/extent count mismatch");
  for (std::size_t n = 0; n < spec.extents.size(); ++n)
    if (spec.true_ranks[n] > spec.extents[n])
      throw std::invalid_argument("generate_synthetic_tucker: rank exceeds extent");

  auto gen = make_stream(seed, trial, StreamPurpose::Tensor);
  DenseTensor core = detail::gaussian_tensor(gen, spec.true_ranks);
  std::vector<MatrixXd> factors;
  factors.reserve(spec.extents.size());
  for (std::size_t n = 0; n < spec.extents.size(); ++n)
    factors.push_back(random_orthonormal(gen, static_cast<int>(spec.extents[n]),
                                         static_cast<int>(spec.true_ranks[n])));
  DenseTensor X = core;
  for (std::size_t n = 0; n < factors.size(); ++n)
    X = mode_n_product(X, factors[n], n);
  add_two_stage_noise(X, spec.l1, spec.l2, seed, trial);
  return X;
}

/// Manifold problem adapter for the Tucker objective over a product of
/// Grassmannians.  Termination metric: ||g||_F / |f|.  The fixed-point sweep
/// is one HOOI pass (forward or forward-backward).
inline ManifoldProblem make_tucker_problem(const DenseTensor& X,
                                           bool forward_backward_sweep = false) {
  ManifoldProblem p;
  p.f = [&X](const FactorTuple& A) { return tucker_objective(X, A); };
  p.grad = [&X](const FactorTuple& A) { return tucker_riemannian_gradient(X, A); };
  p.q_sweep = [&X, forward_backward_sweep](const FactorTuple& A) {
    return hooi_sweep(X, A, forward_backward_sweep);
  };
  p.scaled_norm = [](double f, const VectorXd& g) {
    return g.norm() / std::abs(f);
  };
  return p;
}

}  // namespace accel
