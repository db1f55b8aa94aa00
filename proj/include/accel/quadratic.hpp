/**
 * @file quadratic.hpp
 * @brief SPD quadratic problems f(x) = 1/2 x'Ax - b'x, linear solvers
 *        (Richardson, CG, PCG) and the SGS/SSOR preconditioner.
 */
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>
#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace accel {

using Eigen::VectorXd;
using SparseMat = Eigen::SparseMatrix<double>;

/// SPD quadratic: f(x) = 1/2 x'Ax - b'x, g(x) = Ax - b, residual r = b - Ax.
struct QuadraticProblem {
  std::function<VectorXd(const VectorXd&)> apply_A;
  VectorXd b;
  Eigen::Index n = 0;

  static QuadraticProblem from_sparse(const SparseMat& A, VectorXd b) {
    QuadraticProblem q;
    q.apply_A = [A](const VectorXd& v) { return VectorXd(A * v); };
    q.n = A.rows();
    q.b = std::move(b);
    return q;
  }
  static QuadraticProblem from_dense(const Eigen::MatrixXd& A, VectorXd b) {
    QuadraticProblem q;
    q.apply_A = [A](const VectorXd& v) { return VectorXd(A * v); };
    q.n = A.rows();
    q.b = std::move(b);
    return q;
  }

  double f(const VectorXd& x) const { return 0.5 * x.dot(apply_A(x)) - b.dot(x); }
  VectorXd grad(const VectorXd& x) const { return apply_A(x) - b; }

  /// Sampled symmetry probe: |x'Ay - y'Ax| must be tiny for random x, y.
  bool probe_symmetry(std::mt19937_64& gen, int probes = 4) const {
    std::normal_distribution<double> nd;
    for (int t = 0; t < probes; ++t) {
      VectorXd x(n), y(n);
      for (Eigen::Index i = 0; i < n; ++i) { x(i) = nd(gen); y(i) = nd(gen); }
      const VectorXd Ax = apply_A(x), Ay = apply_A(y);
      const double est = Ax.norm() / std::max(x.norm(), 1e-300);
      if (std::abs(x.dot(Ay) - y.dot(Ax)) >
          1e-12 * x.norm() * y.norm() * std::max(est, 1.0))
        return false;
    }
    return true;
  }
};

/// SSOR preconditioner apply for a sparse SPD matrix A = L + D + U (U = L').
/// P^{-1} = (D + wL) [w(2-w)]^{-1} D^{-1} (D + wU) is the SSOR matrix;
/// the apply returns P v via two triangular solves plus a diagonal scaling,
/// never forming an inverse.  w = 1 gives symmetric Gauss-Seidel.
class SsorPreconditioner {
 public:
  SsorPreconditioner(const SparseMat& A, double omega) : A_(A), omega_(omega) {
    if (!(omega > 0.0 && omega < 2.0))
      throw std::invalid_argument("SSOR: omega must lie in (0,2)");
    diag_ = A.diagonal();
    for (Eigen::Index i = 0; i < diag_.size(); ++i)
      if (diag_(i) == 0.0) throw std::invalid_argument("SSOR: zero diagonal entry");
    A_.makeCompressed();
  }

  /// Returns P v via forward solve, diagonal scaling, backward solve.
  VectorXd apply(const VectorXd& v) const {
    const Eigen::Index n = A_.rows();
    const double w = omega_;
    ensure_rows();
    VectorXd t1(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = v(i);
      for (const auto& [j, a] : rows_[i])
        if (j < i) s -= w * a * t1(j);
      t1(i) = s / diag_(i);
    }
    // t2 = w(2-w) D t1
    VectorXd t2 = (w * (2.0 - w)) * diag_.cwiseProduct(t1);
    // x = (D + w U)^{-1} t2, backward substitution
    VectorXd x(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      double s = t2(i);
      for (const auto& [j, a] : rows_[i])
        if (j > i) s -= w * a * x(j);
      x(i) = s / diag_(i);
    }
    return x;
  }

 private:
  void ensure_rows() const {
    if (!rows_.empty()) return;
    rows_.resize(A_.rows());
    for (int k = 0; k < A_.outerSize(); ++k)
      for (SparseMat::InnerIterator it(A_, k); it; ++it)
        rows_[it.row()].emplace_back(it.col(), it.value());
  }

  SparseMat A_;
  double omega_;
  VectorXd diag_;
  mutable std::vector<std::vector<std::pair<Eigen::Index, double>>> rows_;
};

using PrecondApply = std::function<VectorXd(const VectorXd&)>;

/// One Richardson step x - P(Ax - b).
inline VectorXd richardson_step(const QuadraticProblem& q, const VectorXd& x,
                                const PrecondApply& P) {
  return x - P(q.apply_A(x) - q.b);
}

struct LinearTrace {
  std::vector<double> scaled_residual;  // ||r||/||b|| per iteration (incl. start)
  int iterations = 0;
  bool converged = false;
};

/// (Preconditioned) conjugate gradients.  P == nullptr means plain CG.
inline std::pair<VectorXd, LinearTrace> pcg_solve(const QuadraticProblem& q,
                                                  VectorXd x,
                                                  const PrecondApply& P,
                                                  double tol, int maxit) {
  LinearTrace trace;
  const double bnorm = std::max(q.b.norm(), 1e-300);
  VectorXd g = q.apply_A(x) - q.b;  // g = -r
  VectorXd z = P ? P(-g) : VectorXd(-g);
  VectorXd d = z;                   // d0 = -P g0
  double gz = (-g).dot(z);
  trace.scaled_residual.push_back(g.norm() / bnorm);
  for (int k = 0; k < maxit; ++k) {
    if (trace.scaled_residual.back() < tol) { trace.converged = true; break; }
    const VectorXd Ad = q.apply_A(d);
    const double dAd = d.dot(Ad);
    if (!(dAd > 0) || !std::isfinite(dAd))
      throw std::runtime_error("pcg: non-positive or non-finite curvature");
    const double alpha = -d.dot(g) / dAd;
    x += alpha * d;
    g += alpha * Ad;
    if (!g.allFinite()) throw std::runtime_error("pcg: non-finite residual");
    z = P ? P(-g) : VectorXd(-g);
    const double gz_new = (-g).dot(z);
    const double beta = gz_new / gz;
    gz = gz_new;
    d = z + beta * d;
    ++trace.iterations;
    trace.scaled_residual.push_back(g.norm() / bnorm);
  }
  if (!trace.converged && trace.scaled_residual.back() < tol) trace.converged = true;
  return {std::move(x), std::move(trace)};
}

inline std::pair<VectorXd, LinearTrace> cg_solve(const QuadraticProblem& q,
                                                 VectorXd x, double tol,
                                                 int maxit) {
  return pcg_solve(q, std::move(x), nullptr, tol, maxit);
}

/// Exact step length minimizing f(x + a p) along p: a = p'r / p'Ap, which for
/// conjugate-gradient directions equals r'r / p'Ap.
inline double exact_quadratic_step(const QuadraticProblem& q, const VectorXd& x,
                                   const VectorXd& p) {
  const VectorXd Ap = q.apply_A(p);
  const double pAp = p.dot(Ap);
  if (!(pAp > 0))
    throw std::runtime_error("exact_quadratic_step: nonpositive curvature (A not SPD?)");
  const VectorXd r = q.b - q.apply_A(x);
  return p.dot(r) / pAp;
}

/// 2D Poisson on the unit square, homogeneous Dirichlet boundary, mesh width
/// h in both directions, 5-point stencil; unknowns are the interior nodes.
/// Returns A (SPD, diag 4/h^2, neighbors -1/h^2) and b with b_i = f(x_i,y_i)
/// for the manufactured right-hand side of -Laplace(u) = f,
///   f(x,y) = 2[(1-6x^2) y^2 (1-y^2) + (1-6y^2) x^2 (1-x^2)],
/// whose exact solution is u(x,y) = (x^2-x^4)(y^4-y^2).
inline std::pair<SparseMat, VectorXd> poisson2d(int interior_per_side) {
  const int m = interior_per_side;
  const double h = 1.0 / (m + 1);
  const int n = m * m;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(5 * static_cast<std::size_t>(n));
  VectorXd b(n);
  const double c = 1.0 / (h * h);
  auto id = [m](int i, int j) { return i + m * j; };
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int k = id(i, j);
      trips.emplace_back(k, k, 4.0 * c);
      if (i > 0) trips.emplace_back(k, id(i - 1, j), -c);
      if (i < m - 1) trips.emplace_back(k, id(i + 1, j), -c);
      if (j > 0) trips.emplace_back(k, id(i, j - 1), -c);
      if (j < m - 1) trips.emplace_back(k, id(i, j + 1), -c);
      const double x = (i + 1) * h, y = (j + 1) * h;
      const double f = 2.0 * ((1.0 - 6.0 * x * x) * y * y * (1.0 - y * y) +
                              (1.0 - 6.0 * y * y) * x * x * (1.0 - x * x));
      b(k) = f;
    }
  }
  SparseMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return {std::move(A), std::move(b)};
}

}  // namespace accel
