/**
 * @file grassmann.hpp
 * @brief Grassmann-manifold geometry on Stiefel representatives: horizontal
 *        projection, exponential map, log map and parallel transport.
 *
 * Points are n x p matrices with orthonormal columns; tangent vectors live in
 * the horizontal space H_Y = { Z : Y'Z = 0 }.
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <Eigen/Dense>

namespace accel {

using Eigen::MatrixXd;

/// (I - YY')Z, the orthogonal projection onto the horizontal space at Y.
inline MatrixXd project_horizontal(const MatrixXd& Y, const MatrixXd& Z) {
  return Z - Y * (Y.transpose() * Z);
}

/// Thin-QR re-orthonormalization with sign-fixed R diagonal (keeps the
/// representative deterministic and the constraint at 1e-15 scale).
inline MatrixXd reorthonormalize(const MatrixXd& Y) {
  Eigen::HouseholderQR<MatrixXd> qr(Y);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(Y.rows(), Y.cols());
  const MatrixXd R = qr.matrixQR().topLeftCorner(Y.cols(), Y.cols());
  for (Eigen::Index j = 0; j < Y.cols(); ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

/// Exp_Y(t xi) = Y V cos(S t) V' + U sin(S t) V' for xi = U S V' (thin SVD),
/// re-orthonormalized.  xi = 0 (or t = 0) returns Y.
inline MatrixXd grassmann_exp(const MatrixXd& Y, const MatrixXd& xi, double t = 1.0) {
  if (t == 0.0 || xi.norm() == 0.0) return Y;
  Eigen::BDCSVD<MatrixXd> svd(xi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const MatrixXd& U = svd.matrixU();
  const MatrixXd& V = svd.matrixV();
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd c = (s * t).array().cos();
  const Eigen::VectorXd sn = (s * t).array().sin();
  const MatrixXd out = Y * (V * c.asDiagonal() * V.transpose()) +
                       U * (sn.asDiagonal() * V.transpose());
  return reorthonormalize(out);
}

/// Log_X(Y) = U arctan(S) V' from the thin SVD of (I - XX') Y (X'Y)^{-1}.
/// Nearly singular X'Y (condition above 1e12) raises: Y is at/near the cut
/// locus of X.
inline MatrixXd grassmann_log(const MatrixXd& X, const MatrixXd& Y) {
  const MatrixXd XtY = X.transpose() * Y;
  Eigen::JacobiSVD<MatrixXd> cond_svd(XtY, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = cond_svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e12)
    throw std::runtime_error("grassmann_log: X'Y singular (cut locus)");
  // solve-then-project: Ysol = Y (X'Y)^{-1}, then M = (I - XX') Ysol
  Eigen::PartialPivLU<MatrixXd> lu(MatrixXd(XtY.transpose()));
  const MatrixXd Ysol = lu.solve(Y.transpose()).transpose();
  const MatrixXd M = Ysol - X * (X.transpose() * Ysol);
  Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd theta = svd.singularValues().array().atan();
  return svd.matrixU() * theta.asDiagonal() * svd.matrixV().transpose();
}

/// Parallel transport of eta along the geodesic Exp_X(t xi):
///   T(eta) = ( [XV U] [-sin(S t); cos(S t)] U' + (I - UU') ) eta.
inline MatrixXd vector_transport(const MatrixXd& X, const MatrixXd& xi, double t,
                                 const MatrixXd& eta) {
  if (t == 0.0 || xi.norm() == 0.0) return eta;
  Eigen::BDCSVD<MatrixXd> svd(xi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const MatrixXd& U = svd.matrixU();
  const MatrixXd& V = svd.matrixV();
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd c = (s * t).array().cos();
  const Eigen::VectorXd sn = (s * t).array().sin();
  const MatrixXd Ueta = U.transpose() * eta;
  return (X * V) * ((-sn).asDiagonal() * Ueta) + U * (c.asDiagonal() * Ueta) +
         (eta - U * Ueta);
}

/// Self-transport of xi along its own geodesic (simplified closed form):
///   T(xi) = (-XV sin(S t) + U cos(S t)) S V'.
inline MatrixXd self_transport(const MatrixXd& X, const MatrixXd& xi, double t) {
  if (t == 0.0 || xi.norm() == 0.0) return xi;
  Eigen::BDCSVD<MatrixXd> svd(xi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const MatrixXd& U = svd.matrixU();
  const MatrixXd& V = svd.matrixV();
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd c = (s * t).array().cos();
  const Eigen::VectorXd sn = (s * t).array().sin();
  return ((X * V) * (-sn).asDiagonal() + U * c.asDiagonal()) *
         (s.asDiagonal() * V.transpose());
}

}  // namespace accel
