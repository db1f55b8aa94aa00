/**
 * @file bench.hpp
 * @brief Experiment campaigns: problem x method x preconditioner x line
 *        search composition, seeded multi-trial runs with optional worker
 *        pool, and trace/summary/plot-file emission.
 */
#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "accel/driver.hpp"
#include "accel/manifold_driver.hpp"
#include "accel/problems.hpp"
#include "accel/quadratic.hpp"
#include "accel/tensor_io.hpp"

namespace accel {

/// Raised for invalid experiment configurations (CLI exit code 1).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  // campaign
  std::string problem = "cp-synthetic";  ///< poisson | cp-synthetic | tucker-synthetic | tensor-file
  std::string method = "lbfgs";          ///< als | hooi | cg | pcg | richardson | ncg | lbfgs | lbroyden
  std::string precond = "none";          ///< none | lp | tp
  std::string sweep = "f";               ///< f | fb
  int m = 5;
  std::string linesearch = "modbt";      ///< wolfe | modbt | exact-quadratic
  std::string beta = "pr";               ///< pr | hs | hz
  int restart = 20;
  bool damping = false;
  bool window_transport = false;
  int max_iters = 1000;
  long max_fevals = 10000;
  double tol = 1e-7;
  int trials = 10;
  std::uint64_t seed = 42;
  std::string out_dir = "results";

  // cp-synthetic parameters
  int cp_extent = 50;
  int cp_rank = 5;
  double collinearity = 0.9;
  double l1 = 10.0;
  double l2 = 1.0;

  // tucker-synthetic parameters (cubical)
  int tucker_extent = 60;
  int tucker_true_rank = 20;
  int tucker_target_rank = 10;

  // poisson parameters
  int poisson_interior = 49;  ///< interior nodes per side (h = 1/(interior+1))
  double omega = 1.0;         ///< SSOR relaxation; 1 = symmetric Gauss-Seidel

  // tensor-file parameters
  std::string tensor_file;
  std::string tensor_format = "dtns";  ///< dtns | csv | idx
};

struct TrialOutcome {
  int trial = 0;
  bool converged = false;
  bool aborted = false;
  std::string abort_reason;
  int iterations = 0;
  double final_f = 0.0;
  double final_gnorm = 0.0;
  std::vector<TraceRecord> trace;
};

namespace detail {

inline bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
  for (const char* o : opts)
    if (v == o) return true;
  return false;
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
  if (!detail::one_of(c.problem, {"poisson", "cp-synthetic", "tucker-synthetic", "tensor-file"}))
    throw ConfigError("unknown problem: " + c.problem);
  if (!detail::one_of(c.method, {"als", "hooi", "cg", "pcg", "richardson", "ncg", "lbfgs", "lbroyden"}))
    throw ConfigError("unknown method: " + c.method);
  if (!detail::one_of(c.precond, {"none", "lp", "tp"}))
    throw ConfigError("unknown precond: " + c.precond);
  if (!detail::one_of(c.sweep, {"f", "fb"}))
    throw ConfigError("unknown sweep: " + c.sweep);
  if (!detail::one_of(c.linesearch, {"wolfe", "modbt", "exact-quadratic"}))
    throw ConfigError("unknown linesearch: " + c.linesearch);
  if (!detail::one_of(c.beta, {"pr", "hs", "hz"}))
    throw ConfigError("unknown beta: " + c.beta);
  if (!detail::one_of(c.tensor_format, {"dtns", "csv", "idx"}))
    throw ConfigError("unknown tensor format: " + c.tensor_format);
  if (c.m < 1) throw ConfigError("window m must be >= 1");
  if (c.trials < 0) throw ConfigError("trials must be >= 0");
  if (!(c.tol > 0)) throw ConfigError("tol must be positive");

  const bool quadratic = c.problem == "poisson";
  const bool tucker_like = c.problem == "tucker-synthetic" || c.problem == "tensor-file";
  if (c.linesearch == "exact-quadratic" && !quadratic)
    throw ConfigError("exact-quadratic line search requires a quadratic problem");
  if (detail::one_of(c.method, {"cg", "pcg", "richardson"}) && !quadratic)
    throw ConfigError(c.method + " requires --problem poisson");
  if (c.method == "als" && c.problem != "cp-synthetic")
    throw ConfigError("als requires --problem cp-synthetic");
  if (c.method == "hooi" && !tucker_like)
    throw ConfigError("hooi requires a Tucker problem");
  if (c.method == "ncg" && tucker_like)
    throw ConfigError("ncg is not supported on the manifold (Tucker) problems");
  if (quadratic && detail::one_of(c.method, {"ncg", "lbfgs", "lbroyden"}) &&
      c.linesearch != "exact-quadratic")
    throw ConfigError("quadratic problems use --linesearch exact-quadratic");
}

namespace detail {

inline SolverOptions make_options(const ExperimentConfig& c) {
  SolverOptions o;
  if (c.method == "als" || c.method == "hooi") o.method = Method::FixedPoint;
  else if (c.method == "ncg") o.method = Method::NCG;
  else if (c.method == "lbroyden") o.method = Method::LBroyden;
  else o.method = Method::LBFGS;
  o.precond = c.precond == "lp" ? Precond::LP
            : c.precond == "tp" ? Precond::TP
                                : Precond::None;
  o.m = c.m;
  o.linesearch = c.linesearch == "wolfe" ? LineSearchKind::Wolfe
               : c.linesearch == "exact-quadratic" ? LineSearchKind::ExactQuadratic
                                                   : LineSearchKind::ModBT;
  o.beta = c.beta == "hs" ? BetaRule::HS : c.beta == "hz" ? BetaRule::HZ : BetaRule::PR;
  o.restart = c.restart;
  o.damping = c.damping;
  o.window_transport = c.window_transport;
  o.max_iters = c.max_iters;
  o.max_fevals = c.max_fevals;
  o.tol = c.tol;
  // eta for L-Broyden: unit when nonlinearly preconditioned on CP,
  // matching-gamma on Tucker, plain gamma otherwise
  if (c.problem == "cp-synthetic" && o.precond != Precond::None)
    o.eta_policy = EtaPolicy::One;
  else if (c.problem == "tucker-synthetic" || c.problem == "tensor-file")
    o.eta_policy = EtaPolicy::MatchingGamma;
  else
    o.eta_policy = EtaPolicy::Gamma;
  return o;
}

inline TrialOutcome from_solve(int trial, const SolveResult& r) {
  TrialOutcome t;
  t.trial = trial;
  t.converged = r.converged;
  t.aborted = r.aborted;
  t.abort_reason = r.abort_reason;
  t.iterations = r.iterations;
  if (!r.trace.empty()) {
    t.final_f = r.trace.back().f;
    t.final_gnorm = r.trace.back().gnorm_scaled;
  }
  t.trace = r.trace;
  return t;
}

inline TrialOutcome from_linear(int trial, const LinearTrace& tr) {
  TrialOutcome t;
  t.trial = trial;
  t.converged = tr.converged;
  t.iterations = tr.iterations;
  long matvecs = 0;
  for (std::size_t k = 0; k < tr.scaled_residual.size(); ++k) {
    ++matvecs;
    t.trace.push_back({static_cast<int>(k), 0.0, tr.scaled_residual[k], 0.0, 0,
                       0, matvecs});
  }
  if (!t.trace.empty()) t.final_gnorm = t.trace.back().gnorm_scaled;
  return t;
}

inline TrialOutcome run_poisson_trial(const ExperimentConfig& c, int trial) {
  auto [A, b] = poisson2d(c.poisson_interior);
  QuadraticProblem quad = QuadraticProblem::from_sparse(A, b);
  const VectorXd x0 = VectorXd::Zero(quad.n);
  const double bnorm = std::max(b.norm(), 1e-300);

  if (c.method == "cg")
    return from_linear(trial, cg_solve(quad, x0, c.tol, c.max_iters).second);

  SsorPreconditioner P(A, c.omega);
  auto Papp = [&P](const VectorXd& v) { return P.apply(v); };
  if (c.method == "pcg")
    return from_linear(trial, pcg_solve(quad, x0, Papp, c.tol, c.max_iters).second);
  if (c.method == "richardson") {
    LinearTrace tr;
    VectorXd x = x0;
    tr.scaled_residual.push_back((quad.b - quad.apply_A(x)).norm() / bnorm);
    for (int k = 0; k < c.max_iters && tr.scaled_residual.back() >= c.tol; ++k) {
      x = richardson_step(quad, x, Papp);
      ++tr.iterations;
      tr.scaled_residual.push_back((quad.b - quad.apply_A(x)).norm() / bnorm);
    }
    tr.converged = tr.scaled_residual.back() < c.tol;
    return from_linear(trial, tr);
  }

  NonlinearProblem p;
  p.f = [&quad](const VectorXd& v) { return quad.f(v); };
  p.g = [&quad](const VectorXd& v) { return quad.grad(v); };
  p.q_sweep = [&quad, &Papp](const VectorXd& v) {
    return richardson_step(quad, v, Papp);
  };
  p.quad = &quad;
  p.scaled_norm = [bnorm](double, const VectorXd& g) { return g.norm() / bnorm; };
  return from_solve(trial, solve(p, x0, make_options(c)));
}

inline TrialOutcome run_cp_trial(const ExperimentConfig& c, int trial) {
  CollinearCpSpec spec;
  spec.extent = static_cast<std::size_t>(c.cp_extent);
  spec.rank = c.cp_rank;
  spec.collinearity = c.collinearity;
  spec.l1 = c.l1;
  spec.l2 = c.l2;
  auto [truth, X] = generate_collinear_cp(spec, c.seed, trial);
  (void)truth;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes(
      spec.order, {static_cast<Eigen::Index>(spec.extent), spec.rank});
  NonlinearProblem p = make_cp_problem(X, shapes, c.sweep == "fb");
  const VectorXd x0 =
      cp_vec(random_cp_guess(spec.order, spec.extent, spec.rank, c.seed, trial));
  return from_solve(trial, solve(p, x0, make_options(c)));
}

inline TrialOutcome from_manifold(int trial, const ManifoldSolveResult& r) {
  TrialOutcome t;
  t.trial = trial;
  t.converged = r.converged;
  t.aborted = r.aborted;
  t.abort_reason = r.abort_reason;
  t.iterations = r.iterations;
  if (!r.trace.empty()) {
    t.final_f = r.trace.back().f;
    t.final_gnorm = r.trace.back().gnorm_scaled;
  }
  t.trace = r.trace;
  return t;
}

inline TrialOutcome run_tucker_trial(const ExperimentConfig& c, int trial,
                                     const DenseTensor* fixed = nullptr) {
  DenseTensor X({1});
  if (fixed) {
    X = *fixed;
  } else {
    SyntheticTuckerSpec spec;
    spec.extents.assign(3, static_cast<std::size_t>(c.tucker_extent));
    spec.true_ranks.assign(3, static_cast<std::size_t>(c.tucker_true_rank));
    spec.l1 = c.l1;
    spec.l2 = c.l2;
    X = generate_synthetic_tucker(spec, c.seed, trial);
  }
  std::vector<std::size_t> target(X.order(),
                                  static_cast<std::size_t>(c.tucker_target_rank));
  TuckerTensor init = hosvd_truncate(X, target);
  ManifoldProblem p = make_tucker_problem(X, c.sweep == "fb");
  return from_manifold(trial, manifold_solve(p, init.factors, make_options(c)));
}

inline TrialOutcome run_file_trial(const ExperimentConfig& c, int trial) {
  const TensorFormat fmt = c.tensor_format == "csv" ? TensorFormat::CSV
                         : c.tensor_format == "idx" ? TensorFormat::IDX
                                                    : TensorFormat::DTNS;
  const DenseTensor X = load_tensor(c.tensor_file, fmt);
  return run_tucker_trial(c, trial, &X);
}

}  // namespace detail

inline TrialOutcome run_trial(const ExperimentConfig& c, int trial) {
  if (c.problem == "poisson") return detail::run_poisson_trial(c, trial);
  if (c.problem == "cp-synthetic") return detail::run_cp_trial(c, trial);
  if (c.problem == "tucker-synthetic") return detail::run_tucker_trial(c, trial);
  return detail::run_file_trial(c, trial);
}

/// Worker-pool size: BENCH_THREADS if set, else 1 (fully sequential).
inline int bench_threads() {
  if (const char* env = std::getenv("BENCH_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

/// Run all trials; each trial is independent and fully seeded, so results do
/// not depend on scheduling.  Aborting trials are recorded, not fatal.
inline std::vector<TrialOutcome> run_experiment(const ExperimentConfig& c) {
  validate_config(c);
  std::vector<TrialOutcome> out(static_cast<std::size_t>(c.trials));
  const int workers = std::min(bench_threads(), std::max(c.trials, 1));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next.fetch_add(1); i < c.trials; i = next.fetch_add(1)) {
      try {
        out[static_cast<std::size_t>(i)] = run_trial(c, i);
      } catch (const std::exception& e) {
        TrialOutcome t;
        t.trial = i;
        t.aborted = true;
        t.abort_reason = e.what();
        out[static_cast<std::size_t>(i)] = std::move(t);
      }
      out[static_cast<std::size_t>(i)].trial = i;
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return out;
}

// ---- output emission ----

inline void write_trace_csv(const std::vector<TraceRecord>& trace,
                            const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "iter,f,gnorm_scaled,alpha,q_applies,f_evals,g_evals\n";
  os.precision(17);
  for (const auto& r : trace)
    os << r.k << ',' << r.f << ',' << r.gnorm_scaled << ',' << r.alpha << ','
       << r.q_applies << ',' << r.f_evals << ',' << r.g_evals << '\n';
}

inline std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(is, line) ||
      line != "iter,f,gnorm_scaled,alpha,q_applies,f_evals,g_evals")
    throw std::runtime_error("bad trace header in " + path);
  std::vector<TraceRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    TraceRecord r;
    char comma;
    std::istringstream ss(line);
    ss >> r.k >> comma >> r.f >> comma >> r.gnorm_scaled >> comma >> r.alpha >>
        comma >> r.q_applies >> comma >> r.f_evals >> comma >> r.g_evals;
    if (!ss) throw std::runtime_error("bad trace row in " + path + ": " + line);
    out.push_back(r);
  }
  return out;
}

inline std::string method_tag(const ExperimentConfig& c) {
  std::string tag = c.method;
  if (c.precond != "none") tag += "-" + c.precond;
  if (c.method == "ncg") tag += "-" + c.beta;
  return tag;
}

inline nlohmann::json summary_json(const ExperimentConfig& c,
                                   const std::vector<TrialOutcome>& trials) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["config"] = {
      {"problem", c.problem}, {"method", c.method}, {"precond", c.precond},
      {"sweep", c.sweep}, {"m", c.m}, {"linesearch", c.linesearch},
      {"beta", c.beta}, {"max_iters", c.max_iters}, {"max_fevals", c.max_fevals},
      {"tol", c.tol}, {"trials", c.trials}, {"seed", c.seed}};
  nlohmann::json arr = nlohmann::json::array();
  double iter_sum = 0;
  int converged = 0;
  for (const auto& t : trials) {
    arr.push_back({{"trial", t.trial},
                   {"converged", t.converged},
                   {"aborted", t.aborted},
                   {"abort_reason", t.abort_reason},
                   {"iterations", t.iterations},
                   {"final_f", t.final_f},
                   {"final_gnorm", t.final_gnorm}});
    iter_sum += t.iterations;
    converged += t.converged ? 1 : 0;
  }
  j["trials"] = arr;
  j["aggregate"] = {
      {"num_trials", trials.size()},
      {"num_converged", converged},
      {"mean_iterations", trials.empty() ? 0.0 : iter_sum / trials.size()}};
  return j;
}

/// Writes per-trial CSVs, the JSON summary, and a gnuplot-ready two-column
/// (iter, scaled gradient norm) file from trial 0.
inline void emit_outputs(const ExperimentConfig& c,
                         const std::vector<TrialOutcome>& trials) {
  namespace fs = std::filesystem;
  fs::create_directories(c.out_dir);
  for (const auto& t : trials) {
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%03d.csv", t.trial);
    write_trace_csv(t.trace, (fs::path(c.out_dir) / name).string());
  }
  {
    std::ofstream os(fs::path(c.out_dir) / "summary.json");
    if (!os) throw std::runtime_error("cannot write summary.json");
    os << summary_json(c, trials).dump(2) << '\n';
  }
  if (!trials.empty()) {
    std::ofstream os(fs::path(c.out_dir) /
                     ("residuals_" + method_tag(c) + ".dat"));
    if (!os) throw std::runtime_error("cannot write residual file");
    os.precision(17);
    for (const auto& r : trials.front().trace)
      os << r.k << ' ' << r.gnorm_scaled << '\n';
  }
}

}  // namespace accel
