/**
 * @file qn.hpp
 * @brief Limited-memory quasi-Newton kernels: windowed pair storage, the
 *        two-loop recursion, compact L-BFGS and L-Broyden applies (plain,
 *        left-preconditioned, transformation-preconditioned), gamma/eta
 *        scalings and the damped BFGS pair modification.
 *
 * Conventions: the window holds pairs (s_i, y_i) and, for preconditioned
 * variants, ybar_i (differences of preconditioned gradients) and g0_i (the
 * gradient at the point the pair originated from).  Oldest pair first.
 */
#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <Eigen/Dense>

namespace accel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Windowed (s, y, ybar, g0) storage.  ybar/g0 columns are optional and only
/// populated by preconditioned drivers.
class QNMemory {
 public:
  explicit QNMemory(int capacity) : m_(capacity) {
    if (capacity < 1) throw std::invalid_argument("QNMemory: capacity must be >= 1");
  }

  int capacity() const { return m_; }
  int size() const { return static_cast<int>(S_.size()); }
  bool empty() const { return S_.empty(); }
  void clear() { S_.clear(); Y_.clear(); Ybar_.clear(); G0_.clear(); }

  void push(VectorXd s, VectorXd y) {
    push_impl(std::move(s), std::move(y), {}, {});
  }
  void push(VectorXd s, VectorXd y, VectorXd ybar) {
    push_impl(std::move(s), std::move(y), std::move(ybar), {});
  }
  void push(VectorXd s, VectorXd y, VectorXd ybar, VectorXd g0) {
    push_impl(std::move(s), std::move(y), std::move(ybar), std::move(g0));
  }

  const VectorXd& s(int i) const { return S_[i]; }
  const VectorXd& y(int i) const { return Y_[i]; }
  const VectorXd& ybar(int i) const { return Ybar_[i]; }
  const VectorXd& g0(int i) const { return G0_[i]; }
  bool has_ybar() const { return Ybar_.size() == S_.size() && !S_.empty(); }
  bool has_g0() const { return G0_.size() == S_.size() && !S_.empty(); }

  MatrixXd S_mat() const { return stack(S_); }
  MatrixXd Y_mat() const { return stack(Y_); }
  MatrixXd Ybar_mat() const { return stack(Ybar_); }

  /// D = diag(s_i' y_i) for the supplied y-like columns.
  static VectorXd D_diag(const MatrixXd& S, const MatrixXd& Y) {
    return (S.transpose() * Y).diagonal();
  }
  /// R = upper-triangular part (incl. diagonal) of S'Y.
  static MatrixXd R_upper(const MatrixXd& S, const MatrixXd& Y) {
    return MatrixXd((S.transpose() * Y).triangularView<Eigen::Upper>());
  }
  /// L = strictly lower part of S'Y.
  static MatrixXd L_strict(const MatrixXd& S, const MatrixXd& Y) {
    return MatrixXd((S.transpose() * Y).triangularView<Eigen::StrictlyLower>());
  }
  /// M = strictly lower part of -S'S.
  static MatrixXd M_strict(const MatrixXd& S) {
    return MatrixXd((-(S.transpose() * S)).triangularView<Eigen::StrictlyLower>());
  }

 private:
  void push_impl(VectorXd s, VectorXd y, std::optional<VectorXd> ybar,
                 std::optional<VectorXd> g0) {
    if (size() == m_) {
      S_.pop_front(); Y_.pop_front();
      if (!Ybar_.empty()) Ybar_.pop_front();
      if (!G0_.empty()) G0_.pop_front();
    }
    S_.push_back(std::move(s));
    Y_.push_back(std::move(y));
    if (ybar) Ybar_.push_back(std::move(*ybar));
    if (g0) G0_.push_back(std::move(*g0));
  }

  MatrixXd stack(const std::deque<VectorXd>& cols) const {
    if (cols.empty()) return MatrixXd();
    MatrixXd out(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
      out.col(static_cast<Eigen::Index>(i)) = cols[i];
    return out;
  }

  int m_;
  std::deque<VectorXd> S_, Y_, Ybar_, G0_;
};

/// gamma = s'y / y'y.
inline double gamma_scaling(const VectorXd& s, const VectorXd& y) {
  const double yy = y.dot(y);
  if (yy == 0.0) throw std::invalid_argument("gamma_scaling: zero y");
  return s.dot(y) / yy;
}

/// Guarded scaling: non-finite or nonpositive values fall back to 1.
inline double guard_scaling(double gamma) {
  return (std::isfinite(gamma) && gamma > 0.0) ? gamma : 1.0;
}

/// Two-loop recursion computing H g with H_0 = gamma I and the window's
/// (s, y-like) pairs.  `use_ybar` selects ybar columns (LP variants).
inline VectorXd lbfgs_two_loop(double gamma, const QNMemory& mem,
                               const VectorXd& g, bool use_ybar = false) {
  const int m = mem.size();
  VectorXd q = g;
  std::vector<double> alpha(m), rho(m);
  for (int i = m - 1; i >= 0; --i) {
    const VectorXd& yi = use_ybar ? mem.ybar(i) : mem.y(i);
    rho[i] = 1.0 / yi.dot(mem.s(i));
    alpha[i] = rho[i] * mem.s(i).dot(q);
    q -= alpha[i] * yi;
  }
  VectorXd r = gamma * q;
  for (int i = 0; i < m; ++i) {
    const VectorXd& yi = use_ybar ? mem.ybar(i) : mem.y(i);
    const double beta = rho[i] * yi.dot(r);
    r += (alpha[i] - beta) * mem.s(i);
  }
  return r;
}

namespace detail {

/// Shared middle block of the compact inverse-BFGS apply:
///   out = gamma*lead + [S gamma*Yapp] W [S'g ; gamma*Yapp'g]
/// with W = [[R^-T (D + gamma*Ygram) R^-1, -R^-T], [-R^-1, 0]].
/// R and D come from (S, Ypairs); Ygram = Ypairs' * Yapp.
/// Plain:  lead=g,    Ypairs=Y,    Yapp=Y.
/// LP:     lead=gbar, Ypairs=Ybar, Yapp=Ybar, g:=gbar.
/// TP:     lead=gbar, Ypairs=Y,    Yapp=Ybar, g:=g (true gradient).
inline VectorXd compact_bfgs_core(double gamma, const MatrixXd& S,
                                  const MatrixXd& Ypairs, const MatrixXd& Yapp,
                                  const VectorXd& lead, const VectorXd& g,
                                  bool* singular) {
  if (S.cols() == 0) return gamma * lead;
  const MatrixXd R = QNMemory::R_upper(S, Ypairs);
  for (Eigen::Index i = 0; i < R.rows(); ++i)
    if (R(i, i) == 0.0) { if (singular) *singular = true; return gamma * lead; }
  const VectorXd D = QNMemory::D_diag(S, Ypairs);
  const VectorXd a = S.transpose() * g;
  const VectorXd b = gamma * (Yapp.transpose() * g);
  const auto Rup = R.triangularView<Eigen::Upper>();
  const VectorXd u = Rup.solve(a);
  const MatrixXd Ygram = Ypairs.transpose() * Yapp;
  VectorXd t = D.asDiagonal() * u + gamma * (Ygram * u) - b;
  const VectorXd top = Rup.transpose().solve(t);
  if (singular) *singular = false;
  return gamma * lead + S * top + gamma * (Yapp * (-u));
}

}  // namespace detail

/// Compact inverse L-BFGS apply: H g with H_0 = gamma I.
/// singular (optional out): the inner triangular system was singular and the
/// caller should reset the memory.
inline VectorXd lbfgs_compact_apply(double gamma, const QNMemory& mem,
                                    const VectorXd& g, bool* singular = nullptr) {
  const MatrixXd S = mem.S_mat(), Y = mem.Y_mat();
  return detail::compact_bfgs_core(gamma, S, Y, Y, g, g, singular);
}

/// LP compact apply: plain formula with gbar/ybar substituted throughout.
inline VectorXd lbfgs_lp_compact_apply(double gamma_tilde, const QNMemory& mem,
                                       const VectorXd& gbar,
                                       bool* singular = nullptr) {
  const MatrixXd S = mem.S_mat(), Yb = mem.Ybar_mat();
  return detail::compact_bfgs_core(gamma_tilde, S, Yb, Yb, gbar, gbar, singular);
}

/// TP compact apply: returns Hhat(g).  Needs both the true gradient g and the
/// preconditioned gradient gbar at the current point; D and R are built from
/// the unbarred (s, y) pairs.
inline VectorXd lbfgs_tp_compact_apply(double gamma_hat, const QNMemory& mem,
                                       const VectorXd& g, const VectorXd& gbar,
                                       bool* singular = nullptr) {
  const MatrixXd S = mem.S_mat(), Y = mem.Y_mat(), Yb = mem.Ybar_mat();
  return detail::compact_bfgs_core(gamma_hat, S, Y, Yb, gbar, g, singular);
}

namespace detail {

/// Shared core of the compact inverse-Broyden apply:
///   out = eta * (lead - (eta*Yapp - S) (Mmat + eta*S'Ysys)^-1 S' g)
inline VectorXd compact_broyden_core(double eta, const MatrixXd& S,
                                     const MatrixXd& Yapp, const MatrixXd& Ysys,
                                     const MatrixXd& Mmat, const VectorXd& lead,
                                     const VectorXd& g, bool* singular) {
  if (S.cols() == 0) return eta * lead;
  const MatrixXd inner = Mmat + eta * (S.transpose() * Ysys);
  Eigen::PartialPivLU<MatrixXd> lu(inner);
  // PartialPivLU has no rank query; probe via the U diagonal
  const VectorXd udiag = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < udiag.size(); ++i)
    if (udiag(i) == 0.0 || !std::isfinite(udiag(i))) {
      if (singular) *singular = true;
      return eta * lead;
    }
  const VectorXd w = lu.solve(S.transpose() * g);
  if (singular) *singular = false;
  return eta * (lead - (eta * Yapp - S) * w);
}

}  // namespace detail

/// Compact inverse L-Broyden apply: A^-1 g with A_0^-1 = eta I and
/// M strictly lower = -s_i's_j.
inline VectorXd lbroyden_compact_apply(double eta, const QNMemory& mem,
                                       const VectorXd& g, bool* singular = nullptr) {
  const MatrixXd S = mem.S_mat(), Y = mem.Y_mat();
  return detail::compact_broyden_core(eta, S, Y, Y, QNMemory::M_strict(S), g, g,
                                      singular);
}

/// LP compact L-Broyden: plain formula with gbar/Ybar substituted.
inline VectorXd lbroyden_lp_compact_apply(double eta, const QNMemory& mem,
                                          const VectorXd& gbar,
                                          bool* singular = nullptr) {
  const MatrixXd S = mem.S_mat(), Yb = mem.Ybar_mat();
  return detail::compact_broyden_core(eta, S, Yb, Yb, QNMemory::M_strict(S),
                                      gbar, gbar, singular);
}

/// TP compact L-Broyden: Ahat^-1(g) with Mbar strictly lower = g0_i' s_j,
/// where g0_i is the gradient at the point pair i originated from.
inline VectorXd lbroyden_tp_compact_apply(double eta, const QNMemory& mem,
                                          const VectorXd& g, const VectorXd& gbar,
                                          bool* singular = nullptr) {
  const MatrixXd S = mem.S_mat(), Y = mem.Y_mat(), Yb = mem.Ybar_mat();
  const int m = mem.size();
  MatrixXd Mbar = MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i)
    for (int j = 0; j < i; ++j) Mbar(i, j) = mem.g0(i).dot(mem.s(j));
  return detail::compact_broyden_core(eta, S, Yb, Y, Mbar, gbar, g, singular);
}

/// Damped BFGS pair modification: y' = theta y + (1 - theta) B s with the
/// two-case theta; guarantees s'y' >= 0.1 s'Bs.
inline VectorXd damp_bfgs_pair(const VectorXd& s, const VectorXd& y,
                               const std::function<VectorXd(const VectorXd&)>& B_apply) {
  const VectorXd Bs = B_apply(s);
  const double sBs = s.dot(Bs);
  const double sy = s.dot(y);
  double theta = 1.0;
  if (sy < 0.1 * sBs) theta = 0.9 * sBs / (sBs - sy);
  return theta * y + (1.0 - theta) * Bs;
}

}  // namespace accel
