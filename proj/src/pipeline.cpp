#include "mevt/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mevt/error.hpp"
#include "mevt/rng.hpp"

namespace mevt {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Data:
    case ErrorKind::Argument:
      return kExitInput;
    default:
      return kExitNumerical;
  }
}

void PipelineConfig::validate() const {
  if (!(split > 0.0 && split < 1.0)) fail(ErrorKind::Argument, "split fraction must lie in (0, 1)");
  if (eps_list.empty()) fail(ErrorKind::Argument, "at least one eps value is required");
  for (double e : eps_list) {
    if (!(e > 0.0 && e < 1.0)) fail(ErrorKind::Argument, "eps values must lie in (0, 1)");
  }
  for (double a : alpha_list) {
    if (!(a > 0.0 && a < 1.0)) fail(ErrorKind::Argument, "alpha values must lie in (0, 1)");
  }
  if (cluster_size == 0) fail(ErrorKind::Argument, "cluster size must be positive");
  if (ux.has_value() != uy.has_value()) {
    fail(ErrorKind::Argument, "explicit thresholds need both --ux and --uy");
  }
  if (adf_level != 0.01 && adf_level != 0.05 && adf_level != 0.10) {
    fail(ErrorKind::Argument, "ADF level must be 0.01, 0.05 or 0.10");
  }
  if (input.empty() && !spec) fail(ErrorKind::Argument, "an input file or a synthetic spec is required");
}

Json to_json(const PipelineConfig& c) {
  Json j;
  j["input"] = c.input;
  j["spec"] = c.spec ? to_json(*c.spec) : Json(nullptr);
  j["unit"] = to_string(c.unit);
  j["groups"] = c.groups;
  j["group"] = c.group;
  j["cluster_size"] = c.cluster_size;
  j["autocorrelation_bound"] = c.autocorrelation_bound;
  j["ux"] = c.ux ? Json(*c.ux) : Json(nullptr);
  j["uy"] = c.uy ? Json(*c.uy) : Json(nullptr);
  j["grid"] = Json{{"level_min", c.grid.level_min},
                   {"level_max", c.grid.level_max},
                   {"count", c.grid.count}};
  j["eps"] = c.eps_list;
  j["alpha"] = c.alpha_list;
  j["bootstrap"] = c.bootstrap_rounds;
  j["seed"] = c.seed;
  j["split"] = c.split;
  j["skip_adf"] = c.skip_adf;
  j["adf_level"] = c.adf_level;
  j["adf_lag"] = c.adf_lag ? Json(*c.adf_lag) : Json(nullptr);
  j["adf_max_samples"] = c.adf_max_samples;
  j["pp_bound"] = c.pp_bound;
  j["symmetric"] = c.symmetric;
  j["jackknife"] = c.jackknife == JackknifeMode::LeaveOneOut ? "leave_one_out" : "leave_first_j";
  j["acceleration"] = c.acceleration == AccelerationSign::Standard ? "standard" : "literal";
  j["baseline_bulk"] = c.baseline_bulk;
  j["full_bootstrap"] = c.full_bootstrap;
  j["radial_diagnostic"] = c.radial_diagnostic;
  return j;
}

namespace {

const char* hint_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "check the file exists and has the header timestamp,rx1,rx2";
    case ErrorKind::Data: return "check the input values are finite and positive";
    case ErrorKind::Argument: return "check the command-line options";
    case ErrorKind::Domain: return "the model chain left its mathematical domain";
    case ErrorKind::Numerical: return "the data may be degenerate (constant or collinear)";
    case ErrorKind::Fit: return "choose thresholds with more exceedances or more data";
    case ErrorKind::Transform: return "a joint sample lies outside a fitted tail support";
    case ErrorKind::EmptyTail: return "raise the thresholds so both channels exceed them together";
    case ErrorKind::Bootstrap: return "too many refits failed; use more exceedances";
    case ErrorKind::Interval: return "increase --bootstrap or widen the thresholds";
  }
  return "";
}

template <class F>
auto in_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(e.row(), std::string("stage ") + name + ": " + e.what() + " (" +
                                  hint_for(e.kind()) + ")");
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.rfind("stage ", 0) == 0) throw;
    throw Error(e.kind(), std::string("stage ") + name + ": " + what + " (" + hint_for(e.kind()) +
                              ")");
  }
}

IidSequence head(const IidSequence& s, std::size_t n) {
  IidSequence h = s;
  h.values.resize(n);
  return h;
}

}  // namespace

void stage_load(Analysis& a) {
  in_stage("ingest", [&] {
    const PipelineConfig& c = a.config;
    if (c.spec && c.input.empty()) {
      auto [x, y] = generate(*c.spec, c.threads);
      a.raw_x = std::move(x);
      a.raw_y = std::move(y);
    } else {
      TraceFile f = read_trace_csv(c.input, c.unit);
      a.raw_x = std::move(f.rx1);
      a.raw_y = std::move(f.rx2);
    }
    if (!c.groups.empty()) {
      const GroupRanges g = parse_groups(c.groups);
      if (c.group >= g.size()) fail(ErrorKind::Argument, "group index out of range");
      const auto [lo, hi] = g[c.group];
      if (hi > a.raw_x.samples.size()) {
        fail(ErrorKind::Argument, "group range exceeds the number of rows");
      }
      for (PowerTrace* t : {&a.raw_x, &a.raw_y}) {
        t->samples = std::vector<double>(t->samples.begin() + static_cast<std::ptrdiff_t>(lo),
                                         t->samples.begin() + static_cast<std::ptrdiff_t>(hi));
      }
    }
    if (a.raw_x.samples.empty()) fail(ErrorKind::Data, "no samples to analyse");
  });
}

void stage_stationarity(Analysis& a, bool gate) {
  const PipelineConfig& c = a.config;
  if (c.skip_adf) return;
  in_stage("stationarity", [&] {
    for (auto [trace, out] : {std::pair{&a.raw_x, &a.adf_x}, std::pair{&a.raw_y, &a.adf_y}}) {
      const std::size_t n = std::min(trace->samples.size(), c.adf_max_samples);
      const std::span<const double> s(trace->samples.data(), n);
      const std::size_t lag = c.adf_lag.value_or(schwert_lag(n));
      *out = adf_test(s, lag, c.adf_level);
      if (!c.groups.empty()) (*out)->group_size_M = trace->samples.size();
    }
  });
  if (gate && (!a.adf_x->is_stationary || !a.adf_y->is_stationary)) {
    throw GateStop("stationarity",
                   std::string("ADF test does not reject a unit root for ") +
                       (!a.adf_x->is_stationary ? "rx1" : "rx2") +
                       "; partition the trace into stationary groups with --groups");
  }
}

void stage_decluster(Analysis& a) {
  in_stage("decluster", [&] {
    const PipelineConfig& c = a.config;
    a.seq_x = decluster(a.raw_x, c.cluster_size, c.autocorrelation_bound);
    a.seq_y = decluster(a.raw_y, c.cluster_size, c.autocorrelation_bound);
    const std::size_t n = a.seq_x.n();
    a.n_train = static_cast<std::size_t>(std::floor(c.split * static_cast<double>(n)));
    a.n_test = n - a.n_train;
    if (a.n_train < kMinExceedances || a.n_test == 0) {
      fail(ErrorKind::Data, "too few declustered samples for a training/test split");
    }
  });
}

void stage_gate(Analysis& a, bool gate) {
  in_stage("correlation_gate", [&] {
    a.gate = correlation_gate(head(a.seq_x, a.n_train), head(a.seq_y, a.n_train));
  });
  if (gate && a.gate.verdict == GateVerdict::TailsIndependent) {
    throw GateStop("correlation", "joint lower tails are independent (tail Pearson " +
                                      format_double(a.gate.tail_pearson) +
                                      "); bivariate modelling is not needed");
  }
}

void stage_thresholds(Analysis& a) {
  in_stage("thresholds", [&] {
    const PipelineConfig& c = a.config;
    if (c.ux) {
      a.ux = *c.ux;
      a.uy = *c.uy;
      return;
    }
    DiagnosticOptions opt;
    opt.threads = c.threads;
    a.diag_x = threshold_diagnostics(head(a.seq_x, a.n_train), c.grid, opt);
    a.diag_y = threshold_diagnostics(head(a.seq_y, a.n_train), c.grid, opt);
    if (!a.diag_x->suggested_u || !a.diag_y->suggested_u) {
      fail(ErrorKind::Fit, "no automatic threshold suggestion; pass --ux and --uy");
    }
    a.ux = *a.diag_x->suggested_u;
    a.uy = *a.diag_y->suggested_u;
  });
}

void stage_fit(Analysis& a, bool gate) {
  in_stage("fit", [&] {
    a.tail_x = fit_gpd(a.train_x(), a.ux);
    a.tail_y = fit_gpd(a.train_y(), a.uy);
    a.fit_x = validate_fit(a.tail_x, a.train_x(), a.config.pp_bound);
    a.fit_y = validate_fit(a.tail_y, a.train_y(), a.config.pp_bound);
  });
  if (gate && (!a.fit_x.passed || !a.fit_y.passed)) {
    throw GateStop("validation", std::string("probability plot deviation above the bound for ") +
                                     (!a.fit_x.passed ? "rx1" : "rx2"));
  }
}

void stage_joint(Analysis& a) {
  in_stage("joint_model", [&] {
    a.model = build_bgpd(a.train_x(), a.train_y(), a.tail_x, a.tail_y, a.config.symmetric);
    a.z_model = fit_z_model(a.seq_x.values, a.seq_y.values, a.model, a.config.symmetric);
  });
}

void stage_rates(Analysis& a) {
  in_stage("rate", [&] {
    a.rates.clear();
    for (double eps : a.config.eps_list) {
      a.rates.push_back(select_rate(a.model, eps, a.z_model.angular.beta));
    }
  });
}

void stage_outage(Analysis& a) {
  in_stage("outage", [&] {
    a.outages.clear();
    for (const RateDecision& d : a.rates) {
      a.outages.push_back(
          assess_outage(d, a.test_x(), a.test_y(), a.z_model, a.config.radial_diagnostic));
    }
  });
}

Analysis analyse_to_model(const PipelineConfig& config) {
  config.validate();
  Analysis a;
  a.config = config;
  stage_load(a);
  stage_stationarity(a);
  stage_decluster(a);
  stage_gate(a);
  stage_thresholds(a);
  stage_fit(a);
  stage_joint(a);
  return a;
}

CiReport stage_ci(const Analysis& a) {
  return in_stage("confidence", [&] {
    const PipelineConfig& c = a.config;
    CiReport r;
    r.alphas = c.alpha_list;
    CiOptions opt;
    opt.bootstrap.B = c.bootstrap_rounds;
    opt.bootstrap.threads = c.threads;
    opt.jackknife = c.jackknife;
    opt.sign = c.acceleration;
    opt.bootstrap.seed = derive_seed(c.seed, 1);
    r.resamples_x = resample_gpd(exceedances(a.train_x(), a.ux), a.tail_x.params(), opt);
    opt.bootstrap.seed = derive_seed(c.seed, 2);
    r.resamples_y = resample_gpd(exceedances(a.train_y(), a.uy), a.tail_y.params(), opt);
    for (double alpha : r.alphas) {
      const GpdIntervals ix = gpd_intervals(r.resamples_x, alpha, c.acceleration);
      const GpdIntervals iy = gpd_intervals(r.resamples_y, alpha, c.acceleration);
      r.intervals_x.push_back(ix);
      r.intervals_y.push_back(iy);
      const std::map<std::string, IntervalEstimate> params{
          {"sigma_x", ix.sigma}, {"xi_x", ix.xi}, {"sigma_y", iy.sigma}, {"xi_y", iy.xi}};
      for (const RateDecision& d : a.rates) {
        r.rate_intervals.push_back(propagate_rate_interval(a.model, d, params, alpha));
        if (c.full_bootstrap) {
          BootstrapOptions bo = opt.bootstrap;
          bo.seed = derive_seed(c.seed, 3);
          r.pipeline_bootstrap.push_back(bootstrap_rate_interval(
              a.train_x(), a.train_y(), a.model, a.z_model.angular.beta, d.target_eps, alpha, bo));
        }
      }
    }
    return r;
  });
}

Json to_json(const CiReport& r) {
  Json j;
  j["bootstrap_rounds"] = r.resamples_x.boot_sigma.size() + r.resamples_x.failed_bootstrap;
  j["failed_bootstrap"] = Json{{"x", r.resamples_x.failed_bootstrap},
                               {"y", r.resamples_y.failed_bootstrap}};
  j["failed_jackknife"] = Json{{"x", r.resamples_x.failed_jackknife},
                               {"y", r.resamples_y.failed_jackknife}};
  j["one_step_jackknife"] = Json{{"x", r.resamples_x.one_step_jackknife},
                                 {"y", r.resamples_y.one_step_jackknife}};
  Json levels = Json::array();
  std::size_t k = 0;
  for (std::size_t i = 0; i < r.alphas.size(); ++i) {
    Json l;
    l["alpha"] = r.alphas[i];
    const GpdIntervals& ix = r.intervals_x[i];
    const GpdIntervals& iy = r.intervals_y[i];
    l["parameter_intervals"] = Json{{"sigma_x", to_json(ix.sigma)},
                                    {"xi_x", to_json(ix.xi)},
                                    {"sigma_y", to_json(iy.sigma)},
                                    {"xi_y", to_json(iy.xi)}};
    l["bca_factors"] = Json{{"sigma_x", to_json(ix.sigma_factors)},
                            {"xi_x", to_json(ix.xi_factors)},
                            {"sigma_y", to_json(iy.sigma_factors)},
                            {"xi_y", to_json(iy.xi_factors)}};
    Json rates = Json::array();
    const std::size_t per = r.rate_intervals.size() / std::max<std::size_t>(r.alphas.size(), 1);
    for (std::size_t e = 0; e < per; ++e, ++k) {
      Json ri = to_json(r.rate_intervals[k]);
      ri.erase("parameter_intervals");
      if (!r.pipeline_bootstrap.empty()) ri["pipeline_bootstrap"] = to_json(r.pipeline_bootstrap[k]);
      rates.push_back(std::move(ri));
    }
    l["rate_intervals"] = std::move(rates);
    levels.push_back(std::move(l));
  }
  j["levels"] = std::move(levels);
  return j;
}

BaselineReport stage_baseline(const Analysis& a) {
  return in_stage("baseline", [&] {
    const PipelineConfig& c = a.config;
    BaselineReport b;
    b.selection_x = select_margin(a.train_x(), c.baseline_bulk);
    b.selection_y = select_margin(a.train_y(), c.baseline_bulk);
    b.model = extrapolate_and_transform(b.selection_x.chosen, b.selection_y.chosen, a.model.joint,
                                        c.symmetric);
    const ParametricMargin zx = select_margin(a.seq_x.values, c.baseline_bulk).chosen;
    const ParametricMargin zy = select_margin(a.seq_y.values, c.baseline_bulk).chosen;
    b.z_model = extrapolate_and_transform(
        zx, zy, joint_filter(a.seq_x.values, a.seq_y.values, a.ux, a.uy), c.symmetric);
    for (double eps : c.eps_list) {
      const RateDecision d = baseline_rate(b.model, eps, b.z_model.angular_ep.beta);
      b.rates.push_back(d);
      b.outages.push_back(assess_outage(
          d, a.test_x(), a.test_y(), a.ux, a.uy, [&](double x) { return zx.cdf(x); },
          [&](double y) { return zy.cdf(y); }, b.z_model.angular_ep.beta));
    }
    return b;
  });
}

Json to_json(const BaselineReport& r) {
  Json j;
  auto sel = [](const MarginSelection& s) {
    Json c = Json::array();
    for (const auto& m : s.candidates) c.push_back(to_json(m));
    return Json{{"chosen", to_json(s.chosen)}, {"candidates", c}};
  };
  j["margin_x"] = sel(r.selection_x);
  j["margin_y"] = sel(r.selection_y);
  j["angular"] = to_json(r.model.angular_ep);
  j["max_r"] = r.model.max_r_ep();
  j["z_angular"] = to_json(r.z_model.angular_ep);
  Json rates = Json::array();
  for (std::size_t i = 0; i < r.rates.size(); ++i) {
    Json e = to_json(r.rates[i]);
    e["outage"] = to_json(r.outages[i]);
    rates.push_back(std::move(e));
  }
  j["rates"] = std::move(rates);
  return j;
}

void write_compare_csv(const std::string& path, const Analysis& a, const BaselineReport& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Data, "cannot open " + path + " for writing");
  out << "eps,n,rate_mevt,rate_baseline,outage_mevt,outage_baseline\n";
  for (std::size_t i = 0; i < a.rates.size(); ++i) {
    out << format_double(a.rates[i].target_eps) << ',' << a.n_train << ','
        << format_double(a.rates[i].rate_bits) << ',' << format_double(b.rates[i].rate_bits) << ','
        << format_double(a.outages.size() > i ? a.outages[i].empirical_outage : NAN) << ','
        << format_double(b.outages[i].empirical_outage) << '\n';
  }
}

Json audit_json(const Analysis& a) {
  Json j;
  j["n_train"] = a.n_train;
  j["n_test"] = a.n_test;
  j["thresholds"] = Json{{"ux", a.ux}, {"uy", a.uy}};
  j["tail_x"] = Json{{"zeta", a.tail_x.zeta},
                     {"sigma", a.tail_x.scale_sigma},
                     {"xi", a.tail_x.shape_xi},
                     {"n_exceed", a.tail_x.n_exceed}};
  j["tail_y"] = Json{{"zeta", a.tail_y.zeta},
                     {"sigma", a.tail_y.scale_sigma},
                     {"xi", a.tail_y.shape_xi},
                     {"n_exceed", a.tail_y.n_exceed}};
  j["angular"] = to_json(a.model.angular.beta);
  j["z_angular"] = to_json(a.z_model.angular.beta);
  j["joint_count"] = a.model.joint.size();
  j["max_r"] = a.model.max_r();
  Json chain = Json::array();
  for (const RateDecision& d : a.rates) {
    chain.push_back(Json{{"eps", d.target_eps},
                         {"eps_n", std::isfinite(d.eps_n) ? Json(d.eps_n) : Json(nullptr)},
                         {"angular_arg", std::isfinite(d.angular_arg) ? Json(d.angular_arg)
                                                                       : Json(nullptr)},
                         {"angular_quantile", d.angular_quantile},
                         {"rate_bits", d.rate_bits},
                         {"eps_n_underflow", d.eps_n_underflow}});
  }
  j["rate_chain"] = std::move(chain);
  return j;
}

namespace {

void write_curve_csvs(const std::string& dir, const char* tag, const ThresholdDiagnostics& d) {
  write_mrl_csv(dir + "/mrl_" + tag + ".csv", d);
  write_stability_csv(dir + "/stability_" + tag + ".csv", d);
}

}  // namespace

int run_pipeline(const PipelineConfig& config_in) {
  PipelineConfig config = config_in;
  std::string dir = config.out_dir.empty() ? std::string("mevt_out") : config.out_dir;
  Json report;
  report["stages"] = Json::array();
  auto done = [&](const char* name) {
    report["stages"].push_back(name);
    std::cerr << "[mevt] " << name << " done\n";
  };
  int code = kExitOk;
  try {
    config.validate();
    std::filesystem::create_directories(dir);
    write_json(dir + "/config.json", to_json(config));
    if (config.spec && config.input.empty()) {
      const auto [x, y] = generate(*config.spec, config.threads);
      write_json(dir + "/synth_spec.json", to_json(*config.spec));
      config.input = dir + "/input.csv";
      write_trace_csv(config.input, x, y, Unit::Milliwatt);
      config.unit = Unit::Milliwatt;
      done("synth");
    }

    Analysis a;
    a.config = config;
    stage_load(a);
    done("ingest");
    stage_stationarity(a, false);
    if (a.adf_x) {
      write_json(dir + "/stationarity.json", Json{{"rx1", to_json(*a.adf_x)}, {"rx2", to_json(*a.adf_y)}});
    }
    stage_stationarity(a, true);
    done("stationarity");
    stage_decluster(a);
    write_json(dir + "/decluster.json",
               Json{{"cluster_size", a.seq_x.cluster_size},
                    {"n", a.seq_x.n()},
                    {"n_train", a.n_train},
                    {"n_test", a.n_test},
                    {"lag1_autocorrelation",
                     Json{{"rx1", a.seq_x.lag1_autocorrelation}, {"rx2", a.seq_y.lag1_autocorrelation}}},
                    {"independence_ok",
                     Json{{"rx1", a.seq_x.independence_ok}, {"rx2", a.seq_y.independence_ok}}}});
    done("decluster");
    stage_gate(a, false);
    write_json(dir + "/gate.json", to_json(a.gate));
    stage_gate(a, true);
    done("correlation_gate");
    stage_thresholds(a);
    {
      Json t{{"mode", config.ux ? "explicit" : "auto"}, {"ux", a.ux}, {"uy", a.uy}};
      if (a.diag_x) {
        t["rx1"] = to_json(*a.diag_x);
        t["rx2"] = to_json(*a.diag_y);
        write_curve_csvs(dir, "rx1", *a.diag_x);
        write_curve_csvs(dir, "rx2", *a.diag_y);
      }
      write_json(dir + "/thresholds.json", t);
    }
    done("thresholds");
    stage_fit(a, false);
    write_json(dir + "/fit.json", Json{{"rx1", to_json(a.tail_x)},
                                       {"rx2", to_json(a.tail_y)},
                                       {"validation", Json{{"rx1", to_json(a.fit_x)},
                                                           {"rx2", to_json(a.fit_y)}}}});
    write_fit_csv(dir + "/pp_rx1.csv", a.fit_x);
    write_fit_csv(dir + "/pp_rx2.csv", a.fit_y);
    stage_fit(a, true);
    done("fit");
    stage_joint(a);
    write_json(dir + "/model.json", to_json(a.model));
    write_json(dir + "/z_model.json", to_json(a.z_model));
    done("joint_model");
    stage_rates(a);
    std::filesystem::remove(dir + "/rate_sweep.csv");
    Json rates = Json::array();
    for (const RateDecision& d : a.rates) {
      rates.push_back(to_json(d));
      append_rate_csv(dir + "/rate_sweep.csv", d, a.n_train);
    }
    write_json(dir + "/rates.json", rates);
    done("rate");
    stage_outage(a);
    std::filesystem::remove(dir + "/outage_sweep.csv");
    Json outages = Json::array();
    for (const OutageReport& o : a.outages) {
      outages.push_back(to_json(o));
      append_outage_csv(dir + "/outage_sweep.csv", o);
    }
    write_json(dir + "/outage.json", outages);
    done("outage");
    if (!config.alpha_list.empty()) {
      const CiReport ci = stage_ci(a);
      write_json(dir + "/ci.json", to_json(ci));
      done("confidence");
    }
    const BaselineReport b = stage_baseline(a);
    write_json(dir + "/baseline.json", to_json(b));
    write_compare_csv(dir + "/compare.csv", a, b);
    done("baseline");
    report["status"] = "ok";
    report["audit"] = audit_json(a);
    bool all_satisfied = true;
    for (const OutageReport& o : a.outages) all_satisfied = all_satisfied && o.satisfied;
    report["outage_satisfied"] = all_satisfied;
  } catch (const GateStop& g) {
    report["status"] = "gate_stop";
    report["gate"] = g.gate();
    report["message"] = g.what();
    std::cerr << "mevt: stopped at gate '" << g.gate() << "': " << g.what() << '\n';
    code = kExitGate;
  } catch (const Error& e) {
    report["status"] = "error";
    report["error_kind"] = to_string(e.kind());
    report["message"] = e.what();
    std::cerr << "mevt: " << e.what() << '\n';
    code = exit_code_for(e.kind());
  }
  report["exit_code"] = code;
  try {
    std::filesystem::create_directories(dir);
    write_json(dir + "/report.json", report);
  } catch (const std::exception&) {
  }
  return code;
}

}  // namespace mevt
