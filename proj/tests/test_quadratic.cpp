#include "doctest.h"

#include <Eigen/Dense>

#include "accel/quadratic.hpp"
#include "accel/rng.hpp"

using namespace accel;

namespace {

// Random SPD matrix A = M'M + n*I (well conditioned enough for tests).
Eigen::MatrixXd random_spd(std::mt19937_64& gen, int n) {
  Eigen::MatrixXd M = randn(gen, n, n);
  return M.transpose() * M + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}

// Dense assembly of the SSOR preconditioning matrix
// P = (D + wL) [w(2-w)]^{-1} D^{-1} (D + wU); the class applies P^{-1}... no:
// the class applies the preconditioner action v -> P^{-1} v where P is the
// SSOR matrix, i.e. the dense oracle is
//   apply(v) = (D + wU)^{-1} [w(2-w) D] (D + wL)^{-1} v.
Eigen::MatrixXd ssor_apply_oracle(const Eigen::MatrixXd& A, double w) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd D = A.diagonal().asDiagonal();
  Eigen::MatrixXd L = A.triangularView<Eigen::StrictlyLower>();
  Eigen::MatrixXd U = A.triangularView<Eigen::StrictlyUpper>();
  Eigen::MatrixXd fwd = (D + w * L).inverse();
  Eigen::MatrixXd bwd = (D + w * U).inverse();
  return bwd * (w * (2.0 - w)) * D * fwd;
}

}  // namespace

TEST_CASE("poisson2d small instance: structure and direct-solve vs CG") {
  auto [A, b] = poisson2d(3);  // h = 1/4, n = 9
  REQUIRE(A.rows() == 9);
  const double h2 = 16.0;
  CHECK(A.coeff(0, 0) == doctest::Approx(4.0 * h2));
  CHECK(A.coeff(0, 1) == doctest::Approx(-h2));
  CHECK(A.coeff(0, 3) == doctest::Approx(-h2));
  CHECK(A.coeff(0, 2) == 0.0);

  Eigen::MatrixXd Ad = Eigen::MatrixXd(A);
  CHECK((Ad - Ad.transpose()).norm() == 0.0);
  Eigen::VectorXd direct = Ad.ldlt().solve(b);
  QuadraticProblem q = QuadraticProblem::from_sparse(A, b);
  auto [x, tr] = cg_solve(q, Eigen::VectorXd::Zero(9), 1e-14, 100);
  CHECK(tr.converged);
  CHECK((x - direct).norm() <= 1e-10 * direct.norm());

  // manufactured solution check: u(x,y) = (x^2 - x^4)(y^4 - y^2) at nodes,
  // second-order accuracy so only a loose check on the coarse mesh
  const double h = 0.25;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      const double xx = (i + 1) * h, yy = (j + 1) * h;
      const double u = (xx * xx - std::pow(xx, 4)) * (std::pow(yy, 4) - yy * yy);
      CHECK(std::abs(direct(i + 3 * j) - u) < 5e-3);
    }
}

TEST_CASE("SSOR apply matches the dense triangular-solve oracle") {
  auto gen = make_stream(31, 0, StreamPurpose::Misc);
  for (int n : {5, 40, 200}) {
    Eigen::MatrixXd Ad = random_spd(gen, n);
    SparseMat A = Ad.sparseView();
    for (double w : {1.0, 1.5, 1.9}) {
      SsorPreconditioner P(A, w);
      Eigen::MatrixXd Pd = ssor_apply_oracle(Ad, w);
      Eigen::VectorXd v = randn(gen, n, 1);
      Eigen::VectorXd lhs = P.apply(v);
      Eigen::VectorXd rhs = Pd * v;
      CHECK((lhs - rhs).norm() <= 1e-11 * rhs.norm());
    }
  }
}

TEST_CASE("SSOR rejects invalid relaxation and zero diagonals") {
  auto gen = make_stream(32, 0, StreamPurpose::Misc);
  Eigen::MatrixXd Ad = random_spd(gen, 4);
  SparseMat A = Ad.sparseView();
  CHECK_THROWS_AS(SsorPreconditioner(A, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SsorPreconditioner(A, 2.0), std::invalid_argument);
  Ad(2, 2) = 0.0;
  SparseMat Az = Ad.sparseView();
  CHECK_THROWS_AS(SsorPreconditioner(Az, 1.0), std::invalid_argument);
}

TEST_CASE("CG converges on a random SPD system and matches a direct solve") {
  auto gen = make_stream(33, 0, StreamPurpose::Misc);
  const int n = 30;
  Eigen::MatrixXd Ad = random_spd(gen, n);
  Eigen::VectorXd b = randn(gen, n, 1);
  QuadraticProblem q = QuadraticProblem::from_dense(Ad, b);
  auto [x, tr] = cg_solve(q, Eigen::VectorXd::Zero(n), 1e-12, 500);
  CHECK(tr.converged);
  CHECK((Ad * x - b).norm() <= 1e-10 * b.norm());
  // residual trace starts at 1 for x0 = 0 and ends below tol
  CHECK(tr.scaled_residual.front() == doctest::Approx(1.0));
  CHECK(tr.scaled_residual.back() < 1e-12);
}

TEST_CASE("PCG with SGS needs no more iterations than CG on Poisson") {
  auto [A, b] = poisson2d(20);
  QuadraticProblem q = QuadraticProblem::from_sparse(A, b);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(q.n);
  auto [xc, cg] = cg_solve(q, x0, 1e-10, 2000);
  SsorPreconditioner P(A, 1.0);
  auto [xp, pcg] = pcg_solve(q, x0, [&](const VectorXd& v) { return P.apply(v); },
                             1e-10, 2000);
  CHECK(cg.converged);
  CHECK(pcg.converged);
  CHECK(pcg.iterations < cg.iterations);
  CHECK((xp - xc).norm() <= 1e-7 * xc.norm());
}

TEST_CASE("exact quadratic step minimizes along the direction") {
  auto gen = make_stream(34, 0, StreamPurpose::Misc);
  const int n = 12;
  Eigen::MatrixXd Ad = random_spd(gen, n);
  Eigen::VectorXd b = randn(gen, n, 1);
  QuadraticProblem q = QuadraticProblem::from_dense(Ad, b);
  Eigen::VectorXd x = randn(gen, n, 1), p = randn(gen, n, 1);
  const double a = exact_quadratic_step(q, x, p);
  // derivative of f(x + t p) at t = a must vanish
  const double deriv = p.dot(q.apply_A(x + a * p) - b);
  CHECK(std::abs(deriv) <= 1e-10 * p.norm() * b.norm());
  // and it beats nearby step lengths
  CHECK(q.f(x + a * p) <= q.f(x + (a + 0.1) * p));
  CHECK(q.f(x + a * p) <= q.f(x + (a - 0.1) * p));
}

TEST_CASE("exact quadratic step rejects nonpositive curvature") {
  Eigen::MatrixXd Ad = -Eigen::MatrixXd::Identity(3, 3);
  QuadraticProblem q = QuadraticProblem::from_dense(Ad, Eigen::VectorXd::Zero(3));
  CHECK_THROWS_AS(exact_quadratic_step(q, Eigen::VectorXd::Zero(3),
                                       Eigen::VectorXd::Ones(3)),
                  std::runtime_error);
}

TEST_CASE("richardson step is the SSOR fixed-point sweep") {
  auto gen = make_stream(35, 0, StreamPurpose::Misc);
  const int n = 10;
  Eigen::MatrixXd Ad = random_spd(gen, n);
  SparseMat A = Ad.sparseView();
  Eigen::VectorXd b = randn(gen, n, 1);
  QuadraticProblem q = QuadraticProblem::from_sparse(A, b);
  SsorPreconditioner P(A, 1.0);
  const Eigen::VectorXd xstar = Ad.ldlt().solve(b);
  // the exact solution is a fixed point
  Eigen::VectorXd next = richardson_step(q, xstar, [&](const VectorXd& v) { return P.apply(v); });
  CHECK((next - xstar).norm() <= 1e-10 * xstar.norm());
}

TEST_CASE("symmetry probe distinguishes symmetric from asymmetric operators") {
  auto gen = make_stream(36, 0, StreamPurpose::Misc);
  Eigen::MatrixXd S = random_spd(gen, 8);
  QuadraticProblem qs = QuadraticProblem::from_dense(S, Eigen::VectorXd::Zero(8));
  auto g1 = make_stream(36, 1, StreamPurpose::Misc);
  CHECK(qs.probe_symmetry(g1));
  Eigen::MatrixXd N = S;
  N(0, 1) += 1.0;  // break symmetry
  QuadraticProblem qn = QuadraticProblem::from_dense(N, Eigen::VectorXd::Zero(8));
  auto g2 = make_stream(36, 2, StreamPurpose::Misc);
  CHECK_FALSE(qn.probe_symmetry(g2));
}
