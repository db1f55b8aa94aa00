#include "doctest.h"

#include "accel/grassmann.hpp"
#include "accel/rng.hpp"

using namespace accel;

namespace {

MatrixXd random_point(std::mt19937_64& gen, int n, int p) {
  return random_orthonormal(gen, n, p);
}

MatrixXd random_tangent(std::mt19937_64& gen, const MatrixXd& Y) {
  return project_horizontal(Y, randn(gen, static_cast<int>(Y.rows()),
                                     static_cast<int>(Y.cols())));
}

}  // namespace

TEST_CASE("horizontal projection is idempotent and annihilates the base point") {
  auto gen = make_stream(81, 0, StreamPurpose::Misc);
  for (int t = 0; t < 10; ++t) {
    MatrixXd Y = random_point(gen, 12, 4);
    MatrixXd Z = randn(gen, 12, 4);
    MatrixXd P1 = project_horizontal(Y, Z);
    MatrixXd P2 = project_horizontal(Y, P1);
    CHECK((P1 - P2).norm() <= 1e-13 * std::max(1.0, P1.norm()));
    CHECK((Y.transpose() * P1).norm() <= 1e-13 * Z.norm());
    CHECK((project_horizontal(Y, Y)).norm() <= 1e-13);
  }
}

TEST_CASE("exponential map lands on the Stiefel representative set") {
  auto gen = make_stream(82, 0, StreamPurpose::Misc);
  for (int t = 0; t < 10; ++t) {
    MatrixXd Y = random_point(gen, 15, 3);
    MatrixXd xi = random_tangent(gen, Y);
    MatrixXd Z = grassmann_exp(Y, xi, 0.7);
    CHECK((Z.transpose() * Z - MatrixXd::Identity(3, 3)).norm() <= 1e-12);
  }
  // zero tangent and zero time are exact identities
  MatrixXd Y = random_point(gen, 10, 2);
  CHECK((grassmann_exp(Y, MatrixXd::Zero(10, 2)) - Y).norm() == 0.0);
  CHECK((grassmann_exp(Y, random_tangent(gen, Y), 0.0) - Y).norm() == 0.0);
}

TEST_CASE("log inverts exp for small tangents") {
  auto gen = make_stream(83, 0, StreamPurpose::Misc);
  for (int t = 0; t < 10; ++t) {
    MatrixXd Y = random_point(gen, 14, 4);
    MatrixXd xi = random_tangent(gen, Y);
    xi *= 0.1 / xi.norm();  // ||xi|| = 0.1, well inside the injectivity radius
    MatrixXd Z = grassmann_exp(Y, xi);
    MatrixXd xi_back = grassmann_log(Y, Z);
    CHECK((xi_back - xi).norm() <= 1e-8);
  }
}

TEST_CASE("log of the same subspace is zero even under rotated representatives") {
  auto gen = make_stream(84, 0, StreamPurpose::Misc);
  for (int t = 0; t < 10; ++t) {
    MatrixXd X = random_point(gen, 12, 3);
    MatrixXd Q = random_orthonormal(gen, 3, 3);  // orthogonal 3x3
    MatrixXd xi = grassmann_log(X, MatrixXd(X * Q));
    CHECK(xi.norm() <= 1e-10);
  }
}

TEST_CASE("log raises at the cut locus") {
  // orthogonal subspaces: X'Y = 0 is singular
  MatrixXd X = MatrixXd::Identity(6, 2);
  MatrixXd Y = MatrixXd::Zero(6, 2);
  Y(2, 0) = 1.0;
  Y(3, 1) = 1.0;
  CHECK_THROWS_AS(grassmann_log(X, Y), std::runtime_error);
}

TEST_CASE("parallel transport is an isometry and maps tangent to tangent") {
  auto gen = make_stream(85, 0, StreamPurpose::Misc);
  for (int t = 0; t < 10; ++t) {
    MatrixXd X = random_point(gen, 13, 3);
    MatrixXd xi = random_tangent(gen, X);
    MatrixXd eta = random_tangent(gen, X);
    const double s = 0.8;
    MatrixXd eta_t = vector_transport(X, xi, s, eta);
    CHECK(std::abs(eta_t.norm() - eta.norm()) <= 1e-10 * eta.norm());
    // transported vector is tangent at the endpoint
    MatrixXd Z = grassmann_exp(X, xi, s);
    CHECK((Z.transpose() * eta_t).norm() <= 1e-9 * eta.norm());
    // inner products with the transported direction are preserved
    MatrixXd xi_t = self_transport(X, xi, s);
    const double before = (xi.transpose() * eta).trace();
    const double after = (xi_t.transpose() * eta_t).trace();
    CHECK(after == doctest::Approx(before).epsilon(1e-9));
  }
}

TEST_CASE("self transport agrees with the general transport applied to xi") {
  auto gen = make_stream(86, 0, StreamPurpose::Misc);
  for (int t = 0; t < 10; ++t) {
    MatrixXd X = random_point(gen, 11, 3);
    MatrixXd xi = random_tangent(gen, X);
    const double s = 0.6;
    MatrixXd a = self_transport(X, xi, s);
    MatrixXd b = vector_transport(X, xi, s, xi);
    CHECK((a - b).norm() <= 1e-10 * xi.norm());
  }
}

TEST_CASE("transport at t=0 is the identity") {
  auto gen = make_stream(87, 0, StreamPurpose::Misc);
  MatrixXd X = random_point(gen, 9, 2);
  MatrixXd xi = random_tangent(gen, X);
  MatrixXd eta = random_tangent(gen, X);
  CHECK((vector_transport(X, xi, 0.0, eta) - eta).norm() == 0.0);
  CHECK((self_transport(X, xi, 0.0) - xi).norm() == 0.0);
}

TEST_CASE("reorthonormalize returns the same column space with orthonormal columns") {
  auto gen = make_stream(88, 0, StreamPurpose::Misc);
  MatrixXd Y = randn(gen, 10, 3);
  MatrixXd Q = reorthonormalize(Y);
  CHECK((Q.transpose() * Q - MatrixXd::Identity(3, 3)).norm() <= 1e-13);
  // same span: projection of Y onto span(Q) equals Y
  CHECK((Q * (Q.transpose() * Y) - Y).norm() <= 1e-10 * Y.norm());
}
