/**
 * @file linesearch.hpp
 * @brief Line searches: a bracketing strong-Wolfe search with cubic
 *        interpolation, and the modified backtracking search used with
 *        nonlinearly preconditioned quasi-Newton steps.
 */
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <Eigen/Dense>

namespace accel {

using Eigen::VectorXd;

enum class LineSearchFlag {
  Accepted,             ///< step along the proposed direction accepted
  FallbackPrecondStep,  ///< modBT exhausted its trials; step taken along -gbar
  ResetMemory,          ///< search failed; caller must clear QN memory
};

struct LineSearchOutcome {
  double alpha = 0.0;
  VectorXd x_new;
  double f_new = 0.0;
  LineSearchFlag flag = LineSearchFlag::Accepted;
  int f_evals = 0;  ///< objective evaluations consumed
  int g_evals = 0;  ///< gradient evaluations consumed
};

using ObjectiveFn = std::function<double(const VectorXd&)>;
using GradientFn = std::function<VectorXd(const VectorXd&)>;

/// Strong Wolfe search (bracketing + zoom with cubic interpolation).
/// Accepts alpha with f(x+ap) <= f + c1 a p'g and |p'g(x+ap)| <= c2 |p'g|.
/// On failure returns ResetMemory; the caller is expected to clear its
/// quasi-Newton memory and re-search along its fallback direction.
inline LineSearchOutcome strong_wolfe_search(const ObjectiveFn& f,
                                             const GradientFn& grad,
                                             const VectorXd& x, double fx,
                                             const VectorXd& gx, const VectorXd& p,
                                             double c1 = 1e-4, double c2 = 1e-2,
                                             double alpha0 = 1.0, int maxit = 20) {
  LineSearchOutcome out;
  const double dg0 = p.dot(gx);
  if (!(dg0 < 0.0)) {  // not a descent direction
    out.flag = LineSearchFlag::ResetMemory;
    return out;
  }
  auto phi = [&](double a, double& dphi, bool want_grad) {
    const VectorXd xa = x + a * p;
    const double fa = f(xa);
    ++out.f_evals;
    if (!std::isfinite(fa)) throw std::runtime_error("strong_wolfe: non-finite objective");
    if (want_grad) { dphi = p.dot(grad(xa)); ++out.g_evals; }
    return fa;
  };

  // cubic minimizer of a Hermite interpolant on [a_lo, a_hi]
  auto cubic = [](double a0, double f0, double d0, double a1, double f1, double d1) {
    const double h = a1 - a0;
    if (h == 0.0) return a0;
    const double t1 = d0 + d1 - 3.0 * (f1 - f0) / h;
    const double disc = t1 * t1 - d0 * d1;
    if (disc < 0.0) return 0.5 * (a0 + a1);
    const double t2 = std::sqrt(disc) * (h > 0 ? 1.0 : -1.0);
    const double denom = d1 - d0 + 2.0 * t2;
    if (denom == 0.0) return 0.5 * (a0 + a1);
    double am = a1 - h * (d1 + t2 - t1) / denom;
    const double lo = std::min(a0, a1), hi = std::max(a0, a1);
    if (!(am > lo && am < hi)) am = 0.5 * (a0 + a1);
    return am;
  };

  auto zoom = [&](double a_lo, double f_lo, double d_lo, double a_hi, double f_hi,
                  double d_hi) -> double {
    for (int j = 0; j < maxit; ++j) {
      double a = cubic(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi);
      const double width = std::abs(a_hi - a_lo);
      const double lo = std::min(a_lo, a_hi), hi = std::max(a_lo, a_hi);
      if (a <= lo + 0.05 * width || a >= hi - 0.05 * width) a = 0.5 * (a_lo + a_hi);
      double d = 0.0;
      const double fa = phi(a, d, true);
      if (fa > fx + c1 * a * dg0 || fa >= f_lo) {
        a_hi = a; f_hi = fa; d_hi = d;
      } else {
        if (std::abs(d) <= -c2 * dg0) return a;
        if (d * (a_hi - a_lo) >= 0.0) { a_hi = a_lo; f_hi = f_lo; d_hi = d_lo; }
        a_lo = a; f_lo = fa; d_lo = d;
      }
      if (std::abs(a_hi - a_lo) < 1e-16) break;
    }
    return -1.0;
  };

  double a_prev = 0.0, f_prev = fx, d_prev = dg0;
  double a = alpha0;
  double accepted = -1.0;
  for (int i = 0; i < maxit; ++i) {
    double d = 0.0;
    const double fa = phi(a, d, true);
    if (fa > fx + c1 * a * dg0 || (i > 0 && fa >= f_prev)) {
      accepted = zoom(a_prev, f_prev, d_prev, a, fa, d);
      break;
    }
    if (std::abs(d) <= -c2 * dg0) { accepted = a; break; }
    if (d >= 0.0) {
      accepted = zoom(a, fa, d, a_prev, f_prev, d_prev);
      break;
    }
    a_prev = a; f_prev = fa; d_prev = d;
    a *= 2.0;
  }
  if (accepted <= 0.0) {
    out.flag = LineSearchFlag::ResetMemory;
    return out;
  }
  out.alpha = accepted;
  out.x_new = x + accepted * p;
  out.f_new = f(out.x_new);
  ++out.f_evals;
  out.flag = LineSearchFlag::Accepted;
  return out;
}

/// Modified backtracking search.  Tries alpha in {1, 1/2, 1/4} along p and
/// accepts the first step whose objective does not increase by more than a
/// relative e^(-2 iter) slack (iter is the 1-based outer iteration, so even
/// the first call already has a tight 0.135 relative allowance).  The
/// acceptance test f_new <= f + e^(-2 iter) |f| covers both sign conventions:
/// for f >= 0 it is the "(1 + e^-2iter) f" rule and for f < 0 it is the
/// "(1 - e^-2iter) f" rule.  When all three trials are rejected the memory
/// must be reset: the direction becomes -gbar, alpha = 1/4 is tested once,
/// and alpha = 1/8 is taken untested otherwise.
inline LineSearchOutcome modbt_search(const ObjectiveFn& f, const VectorXd& x,
                                      double fx, const VectorXd& p,
                                      const VectorXd& fallback_dir, int iter) {
  LineSearchOutcome out;
  const double slack = std::exp(-2.0 * iter) * std::abs(fx);
  for (double alpha : {1.0, 0.5, 0.25}) {
    VectorXd xa = x + alpha * p;
    const double fa = f(xa);
    ++out.f_evals;
    if (fa <= fx + slack) {
      out.alpha = alpha;
      out.x_new = std::move(xa);
      out.f_new = fa;
      out.flag = LineSearchFlag::Accepted;
      return out;
    }
  }
  out.flag = LineSearchFlag::FallbackPrecondStep;
  out.alpha = 0.25;
  out.x_new = x + 0.25 * fallback_dir;
  out.f_new = f(out.x_new);
  ++out.f_evals;
  if (out.f_new > fx + slack) {
    out.alpha = 0.125;
    out.x_new = x + 0.125 * fallback_dir;
    out.f_new = f(out.x_new);
    ++out.f_evals;
  }
  return out;
}

}  // namespace accel
