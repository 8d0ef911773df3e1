#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mevt/error.hpp"
#include "mevt/rng.hpp"
#include "mevt/trace.hpp"

using namespace mevt;

namespace {

IidSequence as_seq(std::vector<double> v) {
  IidSequence s;
  s.values = std::move(v);
  return s;
}

}  // namespace

TEST_CASE("CSV ingestion in milliwatts and dBm") {
  std::istringstream mw("timestamp,rx1,rx2\n0,1.0,3\n1,2.0,3\n2,0.5,3\n");
  const auto f = read_trace_csv(mw, Unit::Milliwatt);
  CHECK(f.rx1.sample_count() == 3);
  CHECK(f.rx1.samples == std::vector<double>{1.0, 2.0, 0.5});

  std::istringstream db("timestamp,rx1,rx2\r\nt0, -7 ,0\r\n");
  const auto g = read_trace_csv(db, Unit::Dbm);
  CHECK(g.rx1.samples[0] == doctest::Approx(0.19952623149688797).epsilon(1e-14));
  CHECK(g.rx2.samples[0] == doctest::Approx(1.0));
}

TEST_CASE("CSV errors carry the offending line") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_trace_csv(empty, Unit::Milliwatt), ParseError);

  std::istringstream bad("timestamp,rx1,rx2\n0,1,2\n1,abc,2\n");
  try {
    read_trace_csv(bad, Unit::Milliwatt);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
  }
  std::istringstream fields("timestamp,rx1,rx2\n0,1\n");
  CHECK_THROWS_AS(read_trace_csv(fields, Unit::Milliwatt), ParseError);

  std::istringstream nonfinite("timestamp,rx1,rx2\n0,inf,1\n");
  try {
    read_trace_csv(nonfinite, Unit::Dbm);
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
  }
  CHECK_THROWS_AS(read_trace_csv(std::string("/nonexistent/file.csv"), Unit::Dbm), ParseError);
}

TEST_CASE("CSV write and read round trip") {
  const auto path = std::filesystem::temp_directory_path() / "mevt_trace_roundtrip.csv";
  PowerTrace a{"rx1", {0.25, 1e-7, 3.5}, Unit::Milliwatt};
  PowerTrace b{"rx2", {1.0, 2.0, 0.125}, Unit::Milliwatt};
  write_trace_csv(path.string(), a, b, Unit::Milliwatt);
  const auto f = read_trace_csv(path.string(), Unit::Milliwatt);
  CHECK(f.rx1.samples == a.samples);
  CHECK(f.rx2.samples == b.samples);
  CHECK(ingest(path.string(), Unit::Milliwatt, "rx2").samples == b.samples);
  std::filesystem::remove(path);
}

TEST_CASE("unit conversion round trip") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double dbm = -150.0 + 200.0 * rng.uniform();
    const double back = mw_to_dbm(dbm_to_mw(dbm));
    CHECK(std::fabs(back - dbm) <= 1e-12 * std::max(1.0, std::fabs(dbm)));
  }
}

TEST_CASE("ADF separates white noise from a random walk") {
  // Simulation oracle: rejection rates over repeated draws.
  int white_stationary = 0;
  int walk_stationary = 0;
  constexpr int kReps = 20;
  for (int r = 0; r < kReps; ++r) {
    Rng rng(derive_seed(99, r));
    std::vector<double> w(10000), walk(10000);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = rng.normal();
      acc += rng.normal();
      walk[i] = acc;
    }
    white_stationary += adf_test(w, schwert_lag(w.size()), 0.05).is_stationary ? 1 : 0;
    walk_stationary += adf_test(walk, schwert_lag(walk.size()), 0.05).is_stationary ? 1 : 0;
  }
  CHECK(white_stationary == kReps);
  CHECK(walk_stationary <= 3);  // 5% size test
}

TEST_CASE("ADF statistic is invariant to affine rescaling") {
  Rng rng(8);
  std::vector<double> v(3000), s(3000);
  double prev = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    prev = 0.97 * prev + rng.normal();
    v[i] = prev;
    s[i] = 5.0 * prev + 2.0;
  }
  const auto a = adf_test(v, 4, 0.05);
  const auto b = adf_test(s, 4, 0.05);
  CHECK(a.is_stationary == b.is_stationary);
  CHECK(a.test_statistic == doctest::Approx(b.test_statistic).epsilon(1e-9));
  CHECK(a.critical_values.at("5%") == doctest::Approx(-2.8624).epsilon(1e-3));
}

TEST_CASE("ADF rejects degenerate input") {
  std::vector<double> c(500, 3.0);
  try {
    adf_test(c, 2, 0.05);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
  }
  std::vector<double> short_series(20, 1.0);
  CHECK_THROWS_AS(adf_test(short_series, 2, 0.05), Error);
  CHECK_THROWS_AS(adf_critical_value(0.2, 100), Error);
  CHECK(schwert_lag(10000) == 37);
}

TEST_CASE("decluster block minima") {
  const std::vector<double> v{5, 3, 7, 2, 9, 1};
  const auto d = decluster(v, 2);
  CHECK(d.values == std::vector<double>{3, 2, 1});
  CHECK(decluster(v, 1).values == v);
  CHECK(decluster(v, 4).n() == 1);
  CHECK_THROWS_AS(decluster(v, 0), Error);
  for (std::size_t c = 1; c <= 6; ++c) {
    const auto dc = decluster(v, c);
    CHECK(dc.n() == v.size() / c);
    for (double m : dc.values) CHECK(std::find(v.begin(), v.end(), m) != v.end());
  }
}

TEST_CASE("declustering an AR(1) sequence removes serial dependence") {
  Rng rng(21);
  std::vector<double> v(100000);
  double prev = 0.0;
  for (double& x : v) {
    prev = 0.8 * prev + rng.normal();
    x = prev;
  }
  CHECK(lag1_autocorrelation(v) > 0.75);
  const auto d = decluster(v, 50);
  CHECK(std::fabs(d.lag1_autocorrelation) < 0.1);
  CHECK(d.independence_ok);
}

TEST_CASE("correlation gate verdicts") {
  Rng rng(1234);
  const std::size_t n = 100000;
  std::vector<double> x(n), y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
    z[i] = 0.3 * x[i] + std::sqrt(1.0 - 0.09) * y[i];
  }
  const auto same = correlation_gate(as_seq(x), as_seq(x));
  CHECK(same.pearson == doctest::Approx(1.0));
  CHECK(same.verdict == GateVerdict::TooCorrelated);

  const auto indep = correlation_gate(as_seq(x), as_seq(y));
  CHECK(std::fabs(indep.pearson) < 0.01);
  CHECK(indep.verdict == GateVerdict::TailsIndependent);

  const auto corr = correlation_gate(as_seq(x), as_seq(z));
  CHECK(std::fabs(corr.pearson - 0.3) < 0.01);
  CHECK(corr.verdict == GateVerdict::DiversityReasonable);

  CHECK_THROWS_AS(correlation_gate(as_seq(std::vector<double>(10, 1.0)), as_seq(y)), Error);
}

TEST_CASE("group ranges") {
  const auto g = parse_groups("0:100, 100:250");
  REQUIRE(g.size() == 2);
  CHECK(g[1].first == 100);
  CHECK(g[1].second == 250);
  CHECK_THROWS_AS(parse_groups("5:5"), Error);
  CHECK_THROWS_AS(parse_groups("a:b"), Error);
}
