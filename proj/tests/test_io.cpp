#include <cmath>
#include <cstdio>
#include <limits>

#include "doctest.h"
#include "mevt/error.hpp"
#include "mevt/io.hpp"
#include "mevt/rng.hpp"
#include "mevt/synth.hpp"

using namespace mevt;

TEST_CASE("format_double round-trips and names non-finite values") {
  Rng rng(71);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.below(200)) - 100);
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(NAN) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("non-finite values become null in JSON") {
  RateDecision d;
  d.angular_arg = NAN;
  const Json j = to_json(d);
  CHECK(j["angular_arg"].is_null());
}

TEST_CASE("joint model JSON round trip is bit-exact") {
  SynthSpec s;
  s.n_total = 100000;
  s.seed = 72;
  const auto [x, y] = generate(s);
  const BgpdModel m = build_bgpd(x.samples, y.samples, 1.6, 1.6);
  const std::string path = "test_io_model.json";
  write_json(path, to_json(m));
  const BgpdModel r = bgpd_from_json(read_json(path));
  std::remove(path.c_str());
  CHECK(r.tail_x.scale_sigma == m.tail_x.scale_sigma);
  CHECK(r.tail_x.shape_xi == m.tail_x.shape_xi);
  CHECK(r.tail_y.zeta == m.tail_y.zeta);
  CHECK(r.angular.beta == m.angular.beta);
  CHECK(r.max_r() == m.max_r());
  CHECK(r.joint.indices == m.joint.indices);
  CHECK(r.pickands.omega == m.pickands.omega);
  CHECK(to_json(r).dump() == to_json(m).dump());
}

TEST_CASE("synth spec JSON round trip and rejection") {
  SynthSpec s;
  s.dependence = DependenceFamily::GaussianCopula;
  s.rho = 0.45;
  s.margin_y.family = SynthMarginFamily::Lognormal;
  s.margin_y.mu = 0.3;
  s.margin_y.s = 0.5;
  s.seed = 99;
  const SynthSpec r = synth_spec_from_json(to_json(s));
  CHECK(to_json(r).dump() == to_json(s).dump());
  CHECK(r.rho == 0.45);
  CHECK_THROWS_AS(synth_spec_from_json(Json{{"dependence", {{"family", "clayton"}}}}), Error);
  CHECK_THROWS_AS(synth_spec_from_json(Json{{"n_total", "many"}}), Error);
  CHECK_THROWS_AS(read_json("does/not/exist.json"), ParseError);
}
