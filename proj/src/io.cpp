#include "mevt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "mevt/error.hpp"

namespace mevt {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

// NaN and infinities become null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double get_num(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return v.get<double>();
}

Json strings(const std::vector<std::string>& v) {
  Json a = Json::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Json opt(const std::optional<double>& v) { return v ? num(*v) : Json(nullptr); }

}  // namespace

Json to_json(const BetaParams& b) { return Json{{"p", num(b.p)}, {"q", num(b.q)}}; }

BetaParams beta_from_json(const Json& j) { return {get_num(j, "p"), get_num(j, "q")}; }

Json to_json(const TailModel& m) {
  Json j;
  j["threshold_u"] = num(m.threshold_u);
  j["scale_sigma"] = num(m.scale_sigma);
  j["shape_xi"] = num(m.shape_xi);
  j["zeta"] = num(m.zeta);
  j["n_exceed"] = m.n_exceed;
  j["n_total"] = m.n_total;
  j["log_likelihood"] = num(m.log_likelihood);
  j["se_sigma"] = num(m.se_sigma);
  j["se_xi"] = num(m.se_xi);
  j["cov_sigma_xi"] = num(m.cov_sigma_xi);
  j["warnings"] = strings(m.warnings);
  return j;
}

TailModel tail_model_from_json(const Json& j) {
  TailModel m;
  m.threshold_u = get_num(j, "threshold_u");
  m.scale_sigma = get_num(j, "scale_sigma");
  m.shape_xi = get_num(j, "shape_xi");
  m.zeta = get_num(j, "zeta");
  m.n_exceed = j.at("n_exceed").get<std::size_t>();
  m.n_total = j.at("n_total").get<std::size_t>();
  m.log_likelihood = get_num(j, "log_likelihood");
  m.se_sigma = get_num(j, "se_sigma");
  m.se_xi = get_num(j, "se_xi");
  m.cov_sigma_xi = get_num(j, "cov_sigma_xi");
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  return m;
}

Json to_json(const AngularModel& a) {
  Json j;
  j["beta"] = to_json(a.beta);
  j["mean_omega"] = num(a.mean_omega);
  j["mean_constraint_deviation"] = num(a.mean_constraint_deviation);
  j["symmetric"] = a.symmetric;
  j["count"] = a.count;
  j["warnings"] = strings(a.warnings);
  return j;
}

AngularModel angular_from_json(const Json& j) {
  AngularModel a;
  a.beta = beta_from_json(j.at("beta"));
  a.mean_omega = get_num(j, "mean_omega");
  a.mean_constraint_deviation = get_num(j, "mean_constraint_deviation");
  a.symmetric = j.at("symmetric").get<bool>();
  a.count = j.at("count").get<std::size_t>();
  a.warnings = j.at("warnings").get<std::vector<std::string>>();
  return a;
}

Json to_json(const BgpdModel& m) {
  Json j;
  j["format"] = "mevt.bgpd";
  j["version"] = kModelFormatVersion;
  j["n"] = m.n;
  j["tail_x"] = to_json(m.tail_x);
  j["tail_y"] = to_json(m.tail_y);
  j["angular"] = to_json(m.angular);
  j["max_r"] = num(m.max_r());
  j["clamp"] = Json{{"eps", num(m.pickands.clamp_eps)}, {"count", m.pickands.clamped_count}};
  Json joint;
  joint["x"] = numbers(m.joint.x_exceed);
  joint["y"] = numbers(m.joint.y_exceed);
  joint["indices"] = m.joint.indices;
  j["joint"] = std::move(joint);
  return j;
}

BgpdModel bgpd_from_json(const Json& j) {
  if (j.value("format", std::string()) != "mevt.bgpd") {
    fail(ErrorKind::Data, "model file: not a bivariate tail model document");
  }
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion) {
    fail(ErrorKind::Data, "model file: unsupported version " + std::to_string(version));
  }
  BgpdModel m;
  m.n = j.at("n").get<std::size_t>();
  m.tail_x = tail_model_from_json(j.at("tail_x"));
  m.tail_y = tail_model_from_json(j.at("tail_y"));
  m.angular = angular_from_json(j.at("angular"));
  const Json& joint = j.at("joint");
  m.joint.x_exceed = joint.at("x").get<std::vector<double>>();
  m.joint.y_exceed = joint.at("y").get<std::vector<double>>();
  m.joint.indices = joint.at("indices").get<std::vector<std::size_t>>();
  m.joint.n = m.n;
  m.frechet = frechet_transform(m.joint, m.tail_x, m.tail_y);
  m.pickands = pickands_transform(m.frechet);
  if (m.pickands.max_r != get_num(j, "max_r")) {
    fail(ErrorKind::Data, "model file: recomputed max_r does not match the stored value");
  }
  return m;
}

Json to_json(const RateDecision& d) {
  Json j;
  j["target_eps"] = num(d.target_eps);
  j["eps_n"] = num(d.eps_n);
  j["angular_arg"] = num(d.angular_arg);
  j["angular_quantile"] = num(d.angular_quantile);
  j["rate_bits"] = num(d.rate_bits);
  j["max_r"] = num(d.max_r);
  j["train_beta"] = to_json(d.train_beta);
  j["test_beta"] = to_json(d.test_beta);
  j["model_ref"] = d.model_ref;
  j["eps_n_exceeds_target"] = d.eps_n_exceeds_target;
  j["eps_n_underflow"] = d.eps_n_underflow;
  j["warnings"] = strings(d.warnings);
  return j;
}

Json to_json(const OutageReport& r) {
  Json j;
  j["target_eps"] = num(r.target_eps);
  j["rate_bits"] = num(r.rate_bits);
  j["empirical_outage"] = num(r.empirical_outage);
  j["conditional_outage"] = num(r.conditional_outage);
  j["model_outage"] = num(r.model_outage);
  j["n_test"] = r.n_test;
  j["joint_count"] = r.joint_count;
  j["violations"] = r.violations;
  j["satisfied"] = r.satisfied;
  if (r.radial_diagnostic) j["radial_out_of_domain"] = num(r.radial_out_of_domain);
  j["warnings"] = strings(r.warnings);
  return j;
}

Json to_json(const IntervalEstimate& iv) {
  return Json{{"point", num(iv.point)},   {"lower", num(iv.lower)},
              {"upper", num(iv.upper)},   {"alpha", num(iv.alpha)},
              {"method", to_string(iv.method)}, {"point_outside", iv.point_outside}};
}

Json to_json(const BcaFactors& f) {
  return Json{{"z0", num(f.z0)}, {"a", num(f.a)},   {"B", f.B},
              {"alpha", num(f.alpha)}, {"a1", num(f.a1)}, {"a2", num(f.a2)}};
}

Json to_json(const RateInterval& ri) {
  Json j;
  j["alpha"] = num(ri.alpha);
  j["rate_bits"] = num(ri.decision.rate_bits);
  j["rate_lower"] = num(ri.rate_lower);
  j["rate_upper"] = num(ri.rate_upper);
  j["target_eps"] = num(ri.decision.target_eps);
  Json params;
  for (const auto& [k, v] : ri.parameter_intervals) params[k] = to_json(v);
  j["parameter_intervals"] = std::move(params);
  j["corner_lower"] = Json{{"beta", to_json(ri.corner_lower_beta)}, {"rate", num(ri.corner_lower_rate)}};
  j["corner_upper"] = Json{{"beta", to_json(ri.corner_upper_beta)}, {"rate", num(ri.corner_upper_rate)}};
  j["point_outside"] = ri.point_outside;
  j["warnings"] = strings(ri.warnings);
  return j;
}

Json to_json(const StationarityReport& s) {
  Json j;
  j["test_statistic"] = num(s.test_statistic);
  j["lag_order"] = s.lag_order;
  j["nobs"] = s.nobs;
  Json cv;
  for (const auto& [k, v] : s.critical_values) cv[k] = num(v);
  j["critical_values"] = std::move(cv);
  j["level"] = num(s.level);
  j["is_stationary"] = s.is_stationary;
  j["group_size_M"] = s.group_size_M ? Json(*s.group_size_M) : Json(nullptr);
  return j;
}

Json to_json(const GateResult& g) {
  return Json{{"pearson", num(g.pearson)},
              {"tail_pearson", num(g.tail_pearson)},
              {"tail_pairs", g.tail_pairs},
              {"verdict", to_string(g.verdict)}};
}

Json to_json(const ParametricMargin& m) {
  return Json{{"family", to_string(m.family)}, {"location", num(m.location)},
              {"scale", num(m.scale)},         {"loglik", num(m.loglik)},
              {"aic", num(m.aic)},             {"bic", num(m.bic)},
              {"n", m.n},                      {"k", m.k}};
}

Json to_json(const ThresholdDiagnostics& d) {
  Json j;
  j["candidate_thresholds"] = numbers(d.candidate_thresholds);
  j["mrl_suggested_u"] = opt(d.mrl_suggested_u);
  j["stability_suggested_u"] = opt(d.stability_suggested_u);
  j["suggested_u"] = opt(d.suggested_u);
  j["mrl_points"] = d.mrl_curve.size();
  j["stability_points"] = d.stability_curves.size();
  j["warnings"] = strings(d.warnings);
  return j;
}

Json to_json(const FitDiagnostics& d) {
  return Json{{"n_points", d.pp_points.size()},
              {"max_pp_deviation", num(d.max_pp_deviation)},
              {"bound", num(d.bound)},
              {"passed", d.passed}};
}

namespace {

Json margin_json(const SynthMargin& m) {
  Json j;
  j["family"] = to_string(m.family);
  j["mu"] = num(m.mu);
  j["s"] = num(m.s);
  if (m.family == SynthMarginFamily::GpdGaussian) {
    j["u"] = num(m.u);
    j["zeta"] = num(m.zeta);
    j["sigma"] = num(m.sigma);
    j["xi"] = num(m.xi);
  }
  return j;
}

SynthMargin margin_from_json(const Json& j) {
  SynthMargin m;
  const std::string f = j.value("family", std::string("gpd_gaussian"));
  if (f == "gpd_gaussian") {
    m.family = SynthMarginFamily::GpdGaussian;
  } else if (f == "gaussian") {
    m.family = SynthMarginFamily::Gaussian;
  } else if (f == "lognormal") {
    m.family = SynthMarginFamily::Lognormal;
  } else {
    fail(ErrorKind::Argument, "synth spec: unknown margin family '" + f + "'");
  }
  m.mu = j.value("mu", m.mu);
  m.s = j.value("s", m.s);
  m.u = j.value("u", m.u);
  m.zeta = j.value("zeta", m.zeta);
  m.sigma = j.value("sigma", m.sigma);
  m.xi = j.value("xi", m.xi);
  return m;
}

}  // namespace

Json to_json(const SynthSpec& s) {
  Json j;
  j["margin_x"] = margin_json(s.margin_x);
  j["margin_y"] = margin_json(s.margin_y);
  Json dep;
  dep["family"] = to_string(s.dependence);
  if (s.dependence == DependenceFamily::GaussianCopula) dep["rho"] = num(s.rho);
  if (s.dependence == DependenceFamily::Logistic) dep["theta"] = num(s.theta);
  j["dependence"] = std::move(dep);
  j["n_total"] = s.n_total;
  j["seed"] = s.seed;
  return j;
}

SynthSpec synth_spec_from_json(const Json& j) {
  try {
    SynthSpec s;
    if (j.contains("margin_x")) s.margin_x = margin_from_json(j.at("margin_x"));
    if (j.contains("margin_y")) s.margin_y = margin_from_json(j.at("margin_y"));
    if (j.contains("dependence")) {
      const Json& d = j.at("dependence");
      const std::string f = d.value("family", std::string("logistic"));
      if (f == "independent") {
        s.dependence = DependenceFamily::Independent;
      } else if (f == "gaussian_copula") {
        s.dependence = DependenceFamily::GaussianCopula;
      } else if (f == "logistic") {
        s.dependence = DependenceFamily::Logistic;
      } else {
        fail(ErrorKind::Argument, "synth spec: unknown dependence family '" + f + "'");
      }
      s.rho = d.value("rho", s.rho);
      s.theta = d.value("theta", s.theta);
    }
    s.n_total = j.value("n_total", s.n_total);
    s.seed = j.value("seed", s.seed);
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Argument, std::string("synth spec: ") + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Data, "cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

}  // namespace mevt
