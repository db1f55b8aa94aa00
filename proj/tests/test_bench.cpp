#include "doctest.h"

#include <filesystem>
#include <unistd.h>

#include "accel/bench.hpp"

using namespace accel;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("bench_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

ExperimentConfig small_cp_config() {
  ExperimentConfig c;
  c.problem = "cp-synthetic";
  c.method = "lbfgs";
  c.precond = "lp";
  c.m = 1;
  c.linesearch = "modbt";
  c.cp_extent = 8;
  c.cp_rank = 2;
  c.max_iters = 30;
  c.trials = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("config validation rejects inconsistent combinations") {
  ExperimentConfig c;
  c.problem = "cp-synthetic";
  c.method = "lbfgs";
  c.linesearch = "modbt";
  CHECK_NOTHROW(validate_config(c));

  SUBCASE("unknown enumerations") {
    auto bad = c;
    bad.problem = "mystery";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.method = "newton";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.precond = "both";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.beta = "fr";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
  }
  SUBCASE("method/problem mismatches") {
    auto bad = c;
    bad.method = "cg";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.problem = "tucker-synthetic";
    bad.method = "als";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.method = "hooi";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);  // hooi on cp
    bad = c;
    bad.problem = "tucker-synthetic";
    bad.method = "ncg";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
  }
  SUBCASE("line-search constraints") {
    auto bad = c;
    bad.linesearch = "exact-quadratic";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.problem = "poisson";
    bad.method = "lbfgs";
    bad.linesearch = "modbt";
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad.linesearch = "exact-quadratic";
    CHECK_NOTHROW(validate_config(bad));
  }
  SUBCASE("numeric ranges") {
    auto bad = c;
    bad.m = 0;
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.trials = -1;
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.tol = 0.0;
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
  }
}

TEST_CASE("trace CSV round trips every field at full precision") {
  TempDir dir;
  std::vector<TraceRecord> trace;
  TraceRecord r;
  r.k = 0;
  r.f = 1.0 / 3.0;
  r.gnorm_scaled = 2.7182818284590452e-5;
  r.alpha = 0.25;
  r.q_applies = 3;
  r.f_evals = 4;
  r.g_evals = 5;
  trace.push_back(r);
  r.k = 1;
  r.f = -0.0;
  r.gnorm_scaled = 1e-300;
  trace.push_back(r);
  const std::string path = (dir.path / "t.csv").string();
  write_trace_csv(trace, path);
  auto back = read_trace_csv(path);
  REQUIRE(back.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(back[i].k == trace[i].k);
    CHECK(back[i].f == trace[i].f);
    CHECK(back[i].gnorm_scaled == trace[i].gnorm_scaled);
    CHECK(back[i].alpha == trace[i].alpha);
    CHECK(back[i].q_applies == trace[i].q_applies);
    CHECK(back[i].f_evals == trace[i].f_evals);
    CHECK(back[i].g_evals == trace[i].g_evals);
  }
  CHECK_THROWS_AS(read_trace_csv((dir.path / "missing.csv").string()),
                  std::runtime_error);
}

TEST_CASE("identical configurations reproduce bit-identical traces") {
  ExperimentConfig c = small_cp_config();
  auto a = run_experiment(c);
  auto b = run_experiment(c);
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].converged == b[t].converged);
    REQUIRE(a[t].trace.size() == b[t].trace.size());
    for (std::size_t k = 0; k < a[t].trace.size(); ++k) {
      CHECK(a[t].trace[k].f == b[t].trace[k].f);
      CHECK(a[t].trace[k].gnorm_scaled == b[t].trace[k].gnorm_scaled);
      CHECK(a[t].trace[k].alpha == b[t].trace[k].alpha);
    }
  }
}

TEST_CASE("trials are independent: a one-trial run matches trial 0 of a batch") {
  ExperimentConfig c = small_cp_config();
  auto batch = run_experiment(c);
  c.trials = 1;
  auto solo = run_experiment(c);
  REQUIRE(solo.size() == 1);
  REQUIRE(solo[0].trace.size() == batch[0].trace.size());
  for (std::size_t k = 0; k < solo[0].trace.size(); ++k)
    CHECK(solo[0].trace[k].f == batch[0].trace[k].f);
  // distinct trials see different random data
  if (batch.size() > 1 && !batch[0].trace.empty() && !batch[1].trace.empty())
    CHECK(batch[0].trace.front().f != batch[1].trace.front().f);
}

TEST_CASE("zero iteration budget yields an unconverged trial with its initial record") {
  ExperimentConfig c = small_cp_config();
  c.max_iters = 0;
  c.trials = 1;
  auto out = run_experiment(c);
  REQUIRE(out.size() == 1);
  CHECK_FALSE(out[0].converged);
  CHECK(out[0].iterations == 0);
  CHECK(out[0].trace.size() <= 1);
}

TEST_CASE("output emission writes trial CSVs, the JSON summary and a plot file") {
  TempDir dir;
  ExperimentConfig c = small_cp_config();
  c.max_iters = 5;
  c.out_dir = (dir.path / "results").string();
  auto out = run_experiment(c);
  emit_outputs(c, out);
  namespace fs = std::filesystem;
  CHECK(fs::exists(fs::path(c.out_dir) / "trial_000.csv"));
  CHECK(fs::exists(fs::path(c.out_dir) / "trial_001.csv"));
  CHECK(fs::exists(fs::path(c.out_dir) / "summary.json"));
  CHECK(fs::exists(fs::path(c.out_dir) / ("residuals_" + method_tag(c) + ".dat")));

  std::ifstream is(fs::path(c.out_dir) / "summary.json");
  nlohmann::json j = nlohmann::json::parse(is);
  CHECK(j["schema_version"] == 1);
  CHECK(j["config"]["problem"] == "cp-synthetic");
  CHECK(j["trials"].size() == 2);
  CHECK(j["aggregate"]["num_trials"] == 2);
  // round-trip a written trace
  auto back = read_trace_csv((fs::path(c.out_dir) / "trial_000.csv").string());
  REQUIRE(back.size() == out[0].trace.size());
  for (std::size_t k = 0; k < back.size(); ++k)
    CHECK(back[k].f == out[0].trace[k].f);
}

TEST_CASE("method tags name the variant compactly") {
  ExperimentConfig c;
  c.method = "lbfgs";
  c.precond = "lp";
  CHECK(method_tag(c) == "lbfgs-lp");
  c.method = "ncg";
  c.precond = "none";
  c.beta = "hz";
  CHECK(method_tag(c) == "ncg-hz");
  c.method = "als";
  CHECK(method_tag(c) == "als");
}

TEST_CASE("a failing trial is recorded as aborted, not fatal") {
  ExperimentConfig c;
  c.problem = "tensor-file";
  c.method = "lbfgs";
  c.precond = "lp";
  c.tensor_file = "/nonexistent/path.dtns";
  c.trials = 1;
  c.max_iters = 3;
  auto out = run_experiment(c);
  REQUIRE(out.size() == 1);
  CHECK(out[0].aborted);
  CHECK_FALSE(out[0].abort_reason.empty());
}
