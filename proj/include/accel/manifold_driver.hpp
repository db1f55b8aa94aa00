/**
 * @file manifold_driver.hpp
 * @brief Quasi-Newton driver on a product of Grassmann manifolds: the
 *        preconditioner direction is the negative log map toward the
 *        fixed-point sweep, steps follow the exponential retraction, and
 *        the stored pairs are built from transported tangents.
 *
 * Tangent tuples (one matrix per factor) are vectorized column-wise per
 * factor and concatenated whenever they enter the quasi-Newton formulas;
 * the same layout is used by the Euclidean driver.
 */
#pragma once

#include <functional>
#include <vector>

#include "accel/driver.hpp"
#include "accel/grassmann.hpp"
#include "accel/qn.hpp"

namespace accel {

using FactorTuple = std::vector<MatrixXd>;

struct ManifoldProblem {
  std::function<double(const FactorTuple&)> f;
  /// Riemannian (horizontally projected) gradient tuple.
  std::function<FactorTuple(const FactorTuple&)> grad;
  /// One fixed-point sweep (e.g. HOOI), returning new factors on-manifold.
  std::function<FactorTuple(const FactorTuple&)> q_sweep;
  /// Termination metric from (f, vectorized Riemannian gradient).
  std::function<double(double, const VectorXd&)> scaled_norm;
};

inline VectorXd vec_tuple(const FactorTuple& T) {
  Eigen::Index total = 0;
  for (const auto& t : T) total += t.size();
  VectorXd v(total);
  Eigen::Index off = 0;
  for (const auto& t : T) {
    v.segment(off, t.size()) = Eigen::Map<const VectorXd>(t.data(), t.size());
    off += t.size();
  }
  return v;
}

inline FactorTuple unvec_tuple(const VectorXd& v, const FactorTuple& like) {
  FactorTuple out;
  out.reserve(like.size());
  Eigen::Index off = 0;
  for (const auto& t : like) {
    out.push_back(Eigen::Map<const MatrixXd>(v.data() + off, t.rows(), t.cols()));
    off += t.size();
  }
  return out;
}

namespace detail {

inline FactorTuple retract_tuple(const FactorTuple& x, const FactorTuple& p,
                                 double alpha) {
  FactorTuple out;
  out.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    out.push_back(grassmann_exp(x[k], p[k], alpha));
  return out;
}

inline FactorTuple transport_tuple(const FactorTuple& x, const FactorTuple& xi,
                                   double t, const FactorTuple& eta) {
  FactorTuple out;
  out.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    out.push_back(vector_transport(x[k], xi[k], t, eta[k]));
  return out;
}

inline FactorTuple self_transport_tuple(const FactorTuple& x, const FactorTuple& xi,
                                        double t) {
  FactorTuple out;
  out.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    out.push_back(self_transport(x[k], xi[k], t));
  return out;
}

}  // namespace detail

struct ManifoldSolveResult {
  FactorTuple x;
  std::vector<TraceRecord> trace;
  bool converged = false;
  int iterations = 0;
  bool aborted = false;
  std::string abort_reason;
  long q_applies = 0, f_evals = 0, g_evals = 0;
  long log_fallbacks = 0;  ///< log-map failures replaced by projection
};

/// Methods supported here: FixedPoint (the sweep itself), LBFGS and LBroyden
/// in plain/LP/TP form.  Line search: ModBT along the retraction curve.
inline ManifoldSolveResult manifold_solve(const ManifoldProblem& prob,
                                          FactorTuple x0,
                                          const SolverOptions& opt) {
  ManifoldSolveResult res;
  res.x = std::move(x0);
  if (opt.max_iters <= 0) return res;

  long q_applies = 0, f_evals = 0, g_evals = 0;
  auto F = [&](const FactorTuple& v) { ++f_evals; return prob.f(v); };
  auto G = [&](const FactorTuple& v) { ++g_evals; return prob.grad(v); };
  // gbar = -Log_x(Q(x)); projection fallback when the log map fails
  auto Pbar = [&](const FactorTuple& v) {
    ++q_applies;
    const FactorTuple q = prob.q_sweep(v);
    FactorTuple out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      try {
        out[k] = -grassmann_log(v[k], q[k]);
      } catch (const std::runtime_error&) {
        ++res.log_fallbacks;
        out[k] = -project_horizontal(v[k], q[k] - v[k]);
      }
    }
    return out;
  };
  const bool precond = opt.precond != Precond::None || opt.method == Method::FixedPoint;

  FactorTuple x = res.x;
  double f = F(x);
  FactorTuple g = G(x);
  FactorTuple gbar = precond ? Pbar(x) : g;
  VectorXd gv = vec_tuple(g);
  VectorXd gbarv = vec_tuple(gbar);

  QNMemory mem(std::max(opt.m, 1));

  auto record = [&](int k, double alpha) {
    res.trace.push_back({k, f, prob.scaled_norm(f, gv), alpha, q_applies,
                         f_evals, g_evals});
  };
  record(0, 0.0);

  auto finish = [&]() {
    res.q_applies = q_applies; res.f_evals = f_evals; res.g_evals = g_evals;
    res.x = x;
    return res;
  };

  if (prob.scaled_norm(f, gv) < opt.tol) { res.converged = true; return finish(); }

  for (int k = 1; k <= opt.max_iters; ++k) {
    if (f_evals >= opt.max_fevals) { res.abort_reason = "f-eval budget"; break; }
    if (!std::isfinite(f)) { res.aborted = true; res.abort_reason = "non-finite objective"; break; }

    // ---- direction (vectorized tangents) ----
    VectorXd pv;
    bool singular = false;
    if (opt.method == Method::FixedPoint || mem.empty()) {
      pv = -(precond ? gbarv : gv);
    } else if (opt.method == Method::LBFGS) {
      const int last = mem.size() - 1;
      if (opt.precond == Precond::None) {
        const double gamma = guard_scaling(gamma_scaling(mem.s(last), mem.y(last)));
        pv = -lbfgs_two_loop(gamma, mem, gv, false);
      } else if (opt.precond == Precond::LP) {
        const double gt = guard_scaling(gamma_scaling(mem.s(last), mem.ybar(last)));
        pv = -lbfgs_two_loop(gt, mem, gbarv, true);
      } else {
        const VectorXd gbar_dir = vec_tuple(Pbar(x));
        const double gh = guard_scaling(mem.s(last).dot(mem.y(last)) /
                                        mem.y(last).dot(mem.ybar(last)));
        pv = -lbfgs_tp_compact_apply(gh, mem, gv, gbar_dir, &singular);
        if (singular) { mem.clear(); pv = -gbar_dir; }
      }
    } else {  // LBroyden
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
            eta = guard_scaling(gamma_scaling(mem.s(last), mem.ybar(last)));
          else
            eta = guard_scaling(gamma_scaling(mem.s(last), mem.y(last)));
          break;
      }
      if (opt.precond == Precond::None) {
        pv = -lbroyden_compact_apply(eta, mem, gv, &singular);
      } else if (opt.precond == Precond::LP) {
        pv = -lbroyden_lp_compact_apply(eta, mem, gbarv, &singular);
      } else {
        const VectorXd gbar_dir = vec_tuple(Pbar(x));
        pv = -lbroyden_tp_compact_apply(eta, mem, gv, gbar_dir, &singular);
        if (singular) { mem.clear(); pv = -gbar_dir; }
      }
      if (singular && opt.precond != Precond::TP) { mem.clear(); pv = -(precond ? gbarv : gv); }
    }

    // project the direction onto the horizontal spaces (numerical hygiene:
    // stored pairs are not transported, so small vertical components creep in)
    FactorTuple p = unvec_tuple(pv, x);
    for (std::size_t c = 0; c < x.size(); ++c)
      p[c] = project_horizontal(x[c], p[c]);

    // ---- step (modBT along the retraction curve) ----
    double alpha = 1.0;
    FactorTuple x_new;
    double f_new = 0.0;
    bool fallback = false;
    if (opt.method == Method::FixedPoint) {
      // the pure sweep: don't retrace the log map, apply Q directly
      ++q_applies;
      x_new = prob.q_sweep(x);
      f_new = F(x_new);
    } else {
      const double slack = std::exp(-2.0 * k) * std::abs(f);
      bool accepted = false;
      for (double a : {1.0, 0.5, 0.25}) {
        FactorTuple xa = detail::retract_tuple(x, p, a);
        const double fa = F(xa);
        if (fa <= f + slack) {
          alpha = a; x_new = std::move(xa); f_new = fa; accepted = true;
          break;
        }
      }
      if (!accepted) {
        fallback = true;
        mem.clear();
        for (std::size_t c = 0; c < x.size(); ++c) p[c] = -gbar[c];
        alpha = 0.25;
        x_new = detail::retract_tuple(x, p, alpha);
        f_new = F(x_new);
        if (f_new > f + slack) {
          alpha = 0.125;
          x_new = detail::retract_tuple(x, p, alpha);
          f_new = F(x_new);
        }
      }
    }

    FactorTuple g_new = G(x_new);
    FactorTuple gbar_new = precond ? Pbar(x_new) : g_new;
    VectorXd gv_new = vec_tuple(g_new);
    VectorXd gbarv_new = vec_tuple(gbar_new);

    // ---- transported pair update ----
    if (opt.method != Method::FixedPoint) {
      const FactorTuple xi = p;  // transport along alpha * p
      FactorTuple s_t = detail::self_transport_tuple(x, xi, alpha);
      for (auto& m_ : s_t) m_ *= alpha;  // T(alpha p) = alpha T(p) along same geodesic
      const FactorTuple gT = detail::transport_tuple(x, xi, alpha, g);
      VectorXd s = vec_tuple(s_t);
      VectorXd gTv = vec_tuple(gT);
      VectorXd y = gv_new - gTv;
      VectorXd ybar;
      if (precond) {
        const FactorTuple gbarT = detail::transport_tuple(x, xi, alpha, gbar);
        ybar = gbarv_new - vec_tuple(gbarT);
      } else {
        ybar = y;
      }
      if (opt.window_transport && !mem.empty()) {
        QNMemory moved(mem.capacity());
        for (int i = 0; i < mem.size(); ++i) {
          auto tr = [&](const VectorXd& v) {
            return vec_tuple(detail::transport_tuple(x, xi, alpha, unvec_tuple(v, x)));
          };
          moved.push(tr(mem.s(i)), tr(mem.y(i)), tr(mem.ybar(i)), tr(mem.g0(i)));
        }
        mem = std::move(moved);
      }
      const VectorXd& cache_y = (opt.precond == Precond::LP) ? ybar : y;
      if (std::abs(s.dot(cache_y)) > 1e-14 * s.norm() * cache_y.norm() && !fallback)
        mem.push(std::move(s), std::move(y), std::move(ybar), gTv);
      else if (!fallback)
        ;  // pair rejected
      else
        mem.push(std::move(s), std::move(y), std::move(ybar), gTv);
    }

    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    gbar = std::move(gbar_new);
    gv = std::move(gv_new);
    gbarv = std::move(gbarv_new);
    res.iterations = k;
    record(k, alpha);
    if (prob.scaled_norm(f, gv) < opt.tol) { res.converged = true; break; }
  }
  return finish();
}

}  // namespace accel
