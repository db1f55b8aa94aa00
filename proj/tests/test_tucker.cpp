#include "doctest.h"

#include <random>

#include "accel/rng.hpp"
#include "accel/tucker.hpp"

using namespace accel;

namespace {

DenseTensor random_tensor(std::mt19937_64& gen, std::vector<std::size_t> shape) {
  DenseTensor t(shape);
  std::normal_distribution<double> nd;
  for (auto& v : t.data()) v = nd(gen);
  return t;
}

std::vector<MatrixXd> random_orth_factors(std::mt19937_64& gen,
                                          const std::vector<std::size_t>& shape,
                                          const std::vector<int>& ranks) {
  std::vector<MatrixXd> A;
  for (std::size_t n = 0; n < shape.size(); ++n)
    A.push_back(random_orthonormal(gen, static_cast<int>(shape[n]), ranks[n]));
  return A;
}

}  // namespace

TEST_CASE("projected core and objective agree with direct evaluation") {
  auto gen = make_stream(71, 0, StreamPurpose::Misc);
  std::vector<std::size_t> shape{6, 5, 4};
  DenseTensor X = random_tensor(gen, shape);
  auto A = random_orth_factors(gen, shape, {3, 2, 2});
  DenseTensor core = tucker_core(X, A);
  CHECK(core.shape() == std::vector<std::size_t>({3, 2, 2}));
  const double c = core.frob_norm();
  CHECK(tucker_objective(X, A) == doctest::Approx(-0.5 * c * c));
  // projecting cannot increase the norm
  CHECK(c <= X.frob_norm() + 1e-12);
}

TEST_CASE("Tucker Euclidean gradient matches central finite differences on 20 instances") {
  auto gen = make_stream(72, 0, StreamPurpose::Misc);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<std::size_t> shape{4, 4, 3};
    std::vector<int> ranks{2, 2, 2};
    DenseTensor X = random_tensor(gen, shape);
    // the Euclidean gradient is defined for arbitrary (non-orthonormal)
    // factor matrices; perturbations leave the Stiefel manifold anyway
    std::vector<MatrixXd> A;
    for (std::size_t n = 0; n < shape.size(); ++n)
      A.push_back(randn(gen, static_cast<int>(shape[n]), ranks[n]));
    auto G = tucker_gradient(X, A);
    const double h = 1e-6;
    for (std::size_t n = 0; n < A.size(); ++n) {
      for (Eigen::Index r = 0; r < A[n].rows(); ++r)
        for (Eigen::Index c = 0; c < A[n].cols(); ++c) {
          auto Ap = A, Am = A;
          Ap[n](r, c) += h;
          Am[n](r, c) -= h;
          const double fd =
              (tucker_objective(X, Ap) - tucker_objective(X, Am)) / (2.0 * h);
          CHECK(G[n](r, c) == doctest::Approx(fd).epsilon(2e-6));
        }
    }
  }
}

TEST_CASE("Riemannian gradient is the blockwise horizontal projection") {
  auto gen = make_stream(73, 0, StreamPurpose::Misc);
  std::vector<std::size_t> shape{5, 5, 5};
  DenseTensor X = random_tensor(gen, shape);
  auto A = random_orth_factors(gen, shape, {2, 2, 2});
  auto G = tucker_gradient(X, A);
  auto Gr = tucker_riemannian_gradient(X, A);
  for (std::size_t n = 0; n < A.size(); ++n) {
    CHECK((Gr[n] - (G[n] - A[n] * (A[n].transpose() * G[n]))).norm() <= 1e-13);
    // horizontal: A' Gr = 0
    CHECK((A[n].transpose() * Gr[n]).norm() <= 1e-12 * std::max(1.0, Gr[n].norm()));
  }
}

TEST_CASE("HOOI sweeps never decrease the core norm over 100 random sweeps") {
  auto gen = make_stream(74, 0, StreamPurpose::Misc);
  int sweeps_done = 0;
  while (sweeps_done < 100) {
    std::vector<std::size_t> shape{6, 6, 6};
    DenseTensor X = random_tensor(gen, shape);
    auto A = random_orth_factors(gen, shape, {2, 3, 2});
    double f = tucker_objective(X, A);  // negative half core norm squared
    for (int s = 0; s < 10 && sweeps_done < 100; ++s, ++sweeps_done) {
      A = hooi_sweep(X, A, sweeps_done % 2 == 1);
      const double f_new = tucker_objective(X, A);
      CHECK(f_new <= f + 1e-12 * std::abs(f));
      f = f_new;
      check_orthonormal(A);  // sweeps stay on the Stiefel manifold
    }
  }
}

TEST_CASE("HOOI block update maximizes the projected norm for that block") {
  auto gen = make_stream(75, 0, StreamPurpose::Misc);
  std::vector<std::size_t> shape{6, 5, 4};
  DenseTensor X = random_tensor(gen, shape);
  auto A = random_orth_factors(gen, shape, {2, 2, 2});
  const MatrixXd Y0 = matricize(tucker_partial_core(X, A, 0), 0);
  A[0] = leading_left_singular_vectors(Y0, 2);
  const double best = (A[0].transpose() * Y0).norm();
  // any random orthonormal competitor does no better
  for (int t = 0; t < 10; ++t) {
    MatrixXd Q = random_orthonormal(gen, 6, 2);
    CHECK((Q.transpose() * Y0).norm() <= best + 1e-10);
  }
}

TEST_CASE("HOSVD truncation: orthonormal factors, exact when ranks are full") {
  auto gen = make_stream(76, 0, StreamPurpose::Misc);
  std::vector<std::size_t> shape{4, 3, 5};
  DenseTensor X = random_tensor(gen, shape);
  TuckerTensor full = hosvd_truncate(X, {4, 3, 5});
  check_orthonormal(full.factors);
  // full ranks: reconstruction is exact
  DenseTensor rec = full.core;
  for (std::size_t n = 0; n < 3; ++n)
    rec = mode_n_product(rec, full.factors[n], n);
  double err = 0.0;
  for (std::size_t i = 0; i < X.numel(); ++i) err += std::pow(X[i] - rec[i], 2);
  CHECK(std::sqrt(err) <= 1e-10 * X.frob_norm());

  CHECK_THROWS_AS(hosvd_truncate(X, {5, 3, 5}), std::invalid_argument);
  CHECK_THROWS_AS(hosvd_truncate(X, {4, 3}), std::invalid_argument);
}

TEST_CASE("sign convention makes the SVD factors deterministic") {
  auto gen = make_stream(77, 0, StreamPurpose::Misc);
  MatrixXd M = randn(gen, 8, 6);
  MatrixXd U1 = leading_left_singular_vectors(M, 3);
  MatrixXd U2 = leading_left_singular_vectors(M, 3);
  CHECK((U1 - U2).norm() == 0.0);
  for (Eigen::Index j = 0; j < 3; ++j) {
    Eigen::Index imax = 0;
    U1.col(j).cwiseAbs().maxCoeff(&imax);
    CHECK(U1(imax, j) > 0.0);
  }
}

TEST_CASE("check_orthonormal rejects non-orthonormal factors") {
  std::vector<MatrixXd> A{MatrixXd::Identity(3, 2)};
  check_orthonormal(A);
  A[0](0, 0) = 2.0;
  CHECK_THROWS_AS(check_orthonormal(A), std::invalid_argument);
}
