/**
 * @file ncg.hpp
 * @brief Nonlinear conjugate gradient beta rules: plain PR/HS/HZ, their
 *        left-preconditioned (tilde) forms with barred quantities substituted,
 *        and the transformation-preconditioned (hat) forms mixing true and
 *        preconditioned gradients.
 */
#pragma once

#include <Eigen/Dense>

namespace accel {

using Eigen::VectorXd;

enum class BetaRule { PR, HS, HZ };

/// Plain NCG beta.  y = g_new - g_old, p = previous direction.
inline double ncg_beta(BetaRule rule, const VectorXd& g_new, const VectorXd& g_old,
                       const VectorXd& y, const VectorXd& p) {
  switch (rule) {
    case BetaRule::PR:
      return g_new.dot(y) / g_old.dot(g_old);
    case BetaRule::HS:
      return g_new.dot(y) / y.dot(p);
    case BetaRule::HZ: {
      const double yp = y.dot(p);
      return (y - (2.0 * y.squaredNorm() / yp) * p).dot(g_new) / yp;
    }
  }
  return 0.0;
}

/// LP (tilde) beta: the plain formulas evaluated on barred quantities.
inline double ncg_beta_lp(BetaRule rule, const VectorXd& gbar_new,
                          const VectorXd& gbar_old, const VectorXd& ybar,
                          const VectorXd& p) {
  return ncg_beta(rule, gbar_new, gbar_old, ybar, p);
}

/// TP (hat) beta: mixes true gradients/differences with barred ones.
inline double ncg_beta_tp(BetaRule rule, const VectorXd& g_new,
                          const VectorXd& g_old, const VectorXd& gbar_old,
                          const VectorXd& y, const VectorXd& ybar,
                          const VectorXd& p) {
  switch (rule) {
    case BetaRule::PR:
      return g_new.dot(ybar) / g_old.dot(gbar_old);
    case BetaRule::HS:
      return g_new.dot(ybar) / y.dot(p);
    case BetaRule::HZ: {
      const double yp = y.dot(p);
      return g_new.dot(ybar) / yp - 2.0 * p.dot(g_new) * y.dot(ybar) / (yp * yp);
    }
  }
  return 0.0;
}

}  // namespace accel
