/**
 * @file driver.hpp
 * @brief Unified Euclidean solver loop: fixed-point (preconditioner-only)
 *        iteration, NCG, L-BFGS and L-Broyden, each in plain, LP or TP form,
 *        with pluggable line search, termination metric and cost accounting.
 */
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "accel/linesearch.hpp"
#include "accel/ncg.hpp"
#include "accel/qn.hpp"
#include "accel/quadratic.hpp"

namespace accel {

enum class Method { FixedPoint, NCG, LBFGS, LBroyden };
enum class Precond { None, LP, TP };
enum class LineSearchKind { ModBT, Wolfe, ExactQuadratic };

/// eta for L-Broyden: Gamma = plain gamma of (s,y); One = unit (CP
/// preconditioned policy); MatchingGamma = the gamma formula of the L-BFGS
/// variant with the same preconditioning (Tucker policy).
enum class EtaPolicy { Gamma, One, MatchingGamma };

struct SolverOptions {
  Method method = Method::LBFGS;
  Precond precond = Precond::None;
  int m = 5;
  LineSearchKind linesearch = LineSearchKind::ModBT;
  BetaRule beta = BetaRule::PR;
  int restart = 20;           ///< NCG restart period (beta = 0)
  bool damping = false;       ///< damped BFGS pair modification (B = I)
  EtaPolicy eta_policy = EtaPolicy::Gamma;
  int max_iters = 1000;
  long max_fevals = 10000;
  double tol = 1e-7;
  bool window_transport = false;  ///< manifold driver: transport stored pairs
};

struct TraceRecord {
  int k = 0;
  double f = 0.0;
  double gnorm_scaled = 0.0;
  double alpha = 0.0;
  long q_applies = 0;
  long f_evals = 0;
  long g_evals = 0;
};

/// Problem hooks.  q_sweep is one sweep of the fixed-point iteration
/// (required when precond != None or method == FixedPoint).  quad enables
/// the exact quadratic step.  scaled_norm maps (f, g) to the termination
/// quantity compared against tol.
struct NonlinearProblem {
  ObjectiveFn f;
  GradientFn g;
  std::function<VectorXd(const VectorXd&)> q_sweep;
  const QuadraticProblem* quad = nullptr;
  std::function<double(double, const VectorXd&)> scaled_norm;
};

struct SolveResult {
  VectorXd x;
  std::vector<TraceRecord> trace;
  bool converged = false;
  int iterations = 0;
  bool aborted = false;
  std::string abort_reason;
  long q_applies = 0, f_evals = 0, g_evals = 0;
};

inline SolveResult solve(const NonlinearProblem& prob, VectorXd x0,
                         const SolverOptions& opt) {
  SolveResult res;
  res.x = std::move(x0);
  if (opt.max_iters <= 0) return res;  // empty trace, failure flag

  long q_applies = 0, f_evals = 0, g_evals = 0;
  auto F = [&](const VectorXd& v) { ++f_evals; return prob.f(v); };
  auto G = [&](const VectorXd& v) { ++g_evals; return prob.g(v); };
  auto Pbar = [&](const VectorXd& v) {  // gbar = v - Q(v)
    ++q_applies;
    return VectorXd(v - prob.q_sweep(v));
  };
  const bool precond = opt.precond != Precond::None || opt.method == Method::FixedPoint;

  VectorXd x = res.x;
  double f = F(x);
  VectorXd g = G(x);
  VectorXd gbar = precond ? Pbar(x) : g;

  QNMemory mem(std::max(opt.m, 1));
  VectorXd p_prev, g_prev, gbar_prev;  // NCG state
  bool have_prev_dir = false;
  int since_restart = 0;

  auto record = [&](int k, double alpha) {
    res.trace.push_back({k, f, prob.scaled_norm(f, g), alpha, q_applies,
                         f_evals, g_evals});
  };
  record(0, 0.0);

  auto finish = [&]() {
    res.q_applies = q_applies; res.f_evals = f_evals; res.g_evals = g_evals;
    res.x = x;
    return res;
  };

  if (prob.scaled_norm(f, g) < opt.tol) { res.converged = true; return finish(); }

  for (int k = 1; k <= opt.max_iters; ++k) {
    if (f_evals >= opt.max_fevals) { res.abort_reason = "f-eval budget"; break; }
    if (!std::isfinite(f)) { res.aborted = true; res.abort_reason = "non-finite objective"; break; }

    // ---- direction ----
    VectorXd p;
    const VectorXd& dir_g = precond ? gbar : g;
    bool singular = false;
    switch (opt.method) {
      case Method::FixedPoint:
        p = -gbar;
        break;
      case Method::NCG: {
        if (!have_prev_dir || since_restart >= opt.restart) {
          p = -dir_g;
          since_restart = 0;
        } else {
          double beta = 0.0;
          if (opt.precond == Precond::TP) {
            const VectorXd y = g - g_prev;
            const VectorXd ybar = gbar - gbar_prev;
            beta = ncg_beta_tp(opt.beta, g, g_prev, gbar_prev, y, ybar, p_prev);
          } else if (opt.precond == Precond::LP) {
            const VectorXd ybar = gbar - gbar_prev;
            beta = ncg_beta_lp(opt.beta, gbar, gbar_prev, ybar, p_prev);
          } else {
            const VectorXd y = g - g_prev;
            beta = ncg_beta(opt.beta, g, g_prev, y, p_prev);
          }
          if (!std::isfinite(beta)) beta = 0.0;
          p = -dir_g + beta * p_prev;
        }
        break;
      }
      case Method::LBFGS: {
        if (mem.empty()) {
          p = -dir_g;
        } else if (opt.precond == Precond::None) {
          const double gamma = guard_scaling(
              gamma_scaling(mem.s(mem.size() - 1), mem.y(mem.size() - 1)));
          p = -lbfgs_two_loop(gamma, mem, g, false);
        } else if (opt.precond == Precond::LP) {
          const double gt = guard_scaling(
              gamma_scaling(mem.s(mem.size() - 1), mem.ybar(mem.size() - 1)));
          p = -lbfgs_two_loop(gt, mem, gbar, true);
        } else {  // TP: the leading P(g;x) term is evaluated afresh here
          const VectorXd gbar_dir = Pbar(x);
          const int last = mem.size() - 1;
          const double gh = guard_scaling(
              mem.s(last).dot(mem.y(last)) / mem.y(last).dot(mem.ybar(last)));
          p = -lbfgs_tp_compact_apply(gh, mem, g, gbar_dir, &singular);
          if (singular) { mem.clear(); p = -gbar_dir; }
        }
        break;
      }
      case Method::LBroyden: {
        if (mem.empty()) {
          p = -dir_g;
          break;
        }
        const int last = mem.size() - 1;
        double eta = 1.0;
        switch (opt.eta_policy) {
          case EtaPolicy::Gamma:
            eta = guard_scaling(gamma_scaling(mem.s(last), mem.y(last)));
            break;
          case EtaPolicy::One:
            eta = 1.0;
            break;
          case EtaPolicy::MatchingGamma:
            if (opt.precond == Precond::TP)
              eta = guard_scaling(mem.s(last).dot(mem.y(last)) /
                                  mem.y(last).dot(mem.ybar(last)));
            else if (opt.precond == Precond::LP)
              eta = guard_scaling(
                  gamma_scaling(mem.s(last), mem.ybar(last)));
            else
              eta = guard_scaling(gamma_scaling(mem.s(last), mem.y(last)));
            break;
        }
        if (opt.precond == Precond::None) {
          p = -lbroyden_compact_apply(eta, mem, g, &singular);
        } else if (opt.precond == Precond::LP) {
          p = -lbroyden_lp_compact_apply(eta, mem, gbar, &singular);
        } else {
          const VectorXd gbar_dir = Pbar(x);
          p = -lbroyden_tp_compact_apply(eta, mem, g, gbar_dir, &singular);
          if (singular) { mem.clear(); p = -gbar_dir; break; }
        }
        if (singular) { mem.clear(); p = -dir_g; }
        break;
      }
    }

    // ---- step ----
    double alpha = 1.0;
    VectorXd x_new;
    double f_new = 0.0;
    if (opt.method == Method::FixedPoint) {
      x_new = x + p;  // exactly Q(x)
      f_new = F(x_new);
    } else if (opt.linesearch == LineSearchKind::ExactQuadratic) {
      alpha = exact_quadratic_step(*prob.quad, x, p);
      x_new = x + alpha * p;
      f_new = F(x_new);
    } else if (opt.linesearch == LineSearchKind::ModBT) {
      LineSearchOutcome ls = modbt_search([&](const VectorXd& v) { return F(v); },
                                          x, f, p, -gbar, k);
      if (ls.flag == LineSearchFlag::FallbackPrecondStep) mem.clear();
      alpha = ls.alpha;
      x_new = std::move(ls.x_new);
      f_new = ls.f_new;
    } else {  // strong Wolfe on the original f and g
      auto Ff = [&](const VectorXd& v) { return F(v); };
      auto Gg = [&](const VectorXd& v) { return G(v); };
      LineSearchOutcome ls = strong_wolfe_search(Ff, Gg, x, f, g, p);
      if (ls.flag == LineSearchFlag::ResetMemory) {
        mem.clear();
        have_prev_dir = false;
        since_restart = 0;
        p = -dir_g;
        ls = strong_wolfe_search(Ff, Gg, x, f, g, p);
        if (ls.flag == LineSearchFlag::ResetMemory) {
          res.aborted = true;
          res.abort_reason = "line search failed along fallback direction";
          break;
        }
      }
      alpha = ls.alpha;
      x_new = std::move(ls.x_new);
      f_new = ls.f_new;
    }

    VectorXd g_new = G(x_new);
    VectorXd gbar_new = precond ? Pbar(x_new) : g_new;

    // ---- memory / NCG state update ----
    if (opt.method == Method::LBFGS || opt.method == Method::LBroyden) {
      VectorXd s = x_new - x;
      VectorXd y = g_new - g;
      VectorXd ybar = precond ? VectorXd(gbar_new - gbar) : y;
      if (opt.damping && opt.method == Method::LBFGS) {
        // damp the pair family feeding the D/R caches (B = I)
        auto id = [](const VectorXd& v) { return v; };
        if (opt.precond == Precond::LP) ybar = damp_bfgs_pair(s, ybar, id);
        else y = damp_bfgs_pair(s, y, id);
        if (opt.precond == Precond::None) ybar = y;
      }
      const VectorXd& cache_y = (opt.precond == Precond::LP) ? ybar : y;
      const bool admit =
          std::abs(s.dot(cache_y)) > 1e-14 * s.norm() * cache_y.norm();
      if (admit) mem.push(std::move(s), std::move(y), std::move(ybar), g);
    } else if (opt.method == Method::NCG) {
      g_prev = g;
      gbar_prev = gbar;
      p_prev = p;
      have_prev_dir = true;
      ++since_restart;
    }

    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    gbar = std::move(gbar_new);
    res.iterations = k;
    record(k, alpha);
    if (res.aborted) break;
    if (prob.scaled_norm(f, g) < opt.tol) { res.converged = true; break; }
  }
  return finish();
}

}  // namespace accel
