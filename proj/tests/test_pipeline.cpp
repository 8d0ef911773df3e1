#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "doctest.h"
#include "mevt/pipeline.hpp"

using namespace mevt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

PipelineConfig synthetic(std::uint64_t seed, DependenceFamily dep, const std::string& out) {
  PipelineConfig c;
  SynthSpec s;
  s.dependence = dep;
  s.n_total = 200000;
  s.seed = seed;
  c.spec = s;
  c.bootstrap_rounds = 200;
  c.eps_list = {1e-3, 1e-4};
  c.out_dir = out;
  return c;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(MEVT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config validation") {
  PipelineConfig c;
  c.input = "x.csv";
  c.split = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.split = 0.5;
  c.eps_list = {0.0};
  CHECK_THROWS_AS(c.validate(), Error);
  c.eps_list = {1e-3};
  c.ux = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("logistic spec end to end with a hand-recomputable audit chain") {
  const std::string dir = "pipeline_ok";
  fs::remove_all(dir);
  CHECK(run_pipeline(synthetic(81, DependenceFamily::Logistic, dir)) == kExitOk);
  for (const char* f : {"config.json", "stationarity.json", "decluster.json", "gate.json",
                        "thresholds.json", "fit.json", "model.json", "z_model.json", "rates.json",
                        "outage.json", "ci.json", "baseline.json", "compare.csv", "report.json"}) {
    CHECK_MESSAGE(fs::exists(fs::path(dir) / f), f);
  }
  const Json report = read_json(dir + "/report.json");
  CHECK(report["status"] == "ok");
  const Json outage = read_json(dir + "/outage.json");
  CHECK(outage[1]["target_eps"].get<double>() == 1e-4);
  CHECK(outage[1]["satisfied"].get<bool>());

  const Json& audit = report["audit"];
  const double p = audit["angular"]["p"], q = audit["angular"]["q"];
  const double max_r = audit["max_r"];
  for (const Json& step : audit["rate_chain"]) {
    const double eps_n = step["eps_n"];
    const double a = 0.5 * max_r * std::log(eps_n);
    const double w = boost::math::ibeta_inv(p, q, a);
    CHECK(std::fabs(w - step["angular_quantile"].get<double>()) <= 1e-9);
    CHECK(std::fabs(std::log2(1.0 + w) - step["rate_bits"].get<double>()) <= 1e-9);
  }
  fs::remove_all(dir);
}

TEST_CASE("independent tails stop at the correlation gate") {
  const std::string dir = "pipeline_gate";
  fs::remove_all(dir);
  CHECK(run_pipeline(synthetic(82, DependenceFamily::Independent, dir)) == kExitGate);
  const Json report = read_json(dir + "/report.json");
  CHECK(report["gate"] == "correlation");
  CHECK_FALSE(fs::exists(fs::path(dir) / "thresholds.json"));
  fs::remove_all(dir);
}

TEST_CASE("missing input is an input error") {
  PipelineConfig c;
  c.input = "no_such_file.csv";
  c.out_dir = "pipeline_missing";
  CHECK(run_pipeline(c) == kExitInput);
  const Json report = read_json("pipeline_missing/report.json");
  CHECK(report["error_kind"] == "parse");
  fs::remove_all("pipeline_missing");
}

TEST_CASE("repeated runs are byte-identical") {
  auto c = synthetic(83, DependenceFamily::Logistic, "pipeline_a");
  REQUIRE(run_pipeline(c) == kExitOk);
  c.out_dir = "pipeline_b";
  c.threads = 4;
  REQUIRE(run_pipeline(c) == kExitOk);
  for (const auto& e : fs::directory_iterator("pipeline_a")) {
    const auto other = fs::path("pipeline_b") / e.path().filename();
    CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
  }
  fs::remove_all("pipeline_a");
  fs::remove_all("pipeline_b");
}

TEST_CASE("command-line exit codes") {
  CHECK(cli("--help") == 0);
  CHECK(cli("rate --input no_such_file.csv") == 2);
  CHECK(cli("rate --bogus-flag") == 2);
  CHECK(cli("rate --input x.csv --split 2") == 2);
  CHECK(cli("synth --out cli_trace.csv --n 60000 --seed 3") == 0);
  CHECK(cli("rate --input cli_trace.csv --eps 1e-3 --sweep cli_sweep.csv") == 0);
  CHECK(slurp("cli_sweep.csv").rfind("eps", 0) == 0);
  CHECK(cli("synth --out cli_ind.csv --n 60000 --dependence independent") == 0);
  CHECK(cli("rate --input cli_ind.csv") == 3);
  CHECK(cli("rate --input cli_trace.csv --ux 1e-9 --uy 1e-9") == 4);
  for (const char* f : {"cli_trace.csv", "cli_sweep.csv", "cli_ind.csv"}) fs::remove(f);
}
