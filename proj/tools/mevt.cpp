#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "mevt/io.hpp"
#include "mevt/pipeline.hpp"
#include "mevt/simd.hpp"

using namespace mevt;

namespace {

struct SynthFlags {
  std::string spec_path;
  std::string out;
  std::string unit = "mw";
  std::string margin = "gpd_gaussian";
  std::string dependence = "logistic";
  double mu = 2.0, s = 0.3, u = 1.6, zeta = 0.05, sigma = 0.35, xi = -0.25;
  double rho = 0.3, theta = 0.5;
  std::size_t n = 100000;
  std::uint64_t seed = 1;

  SynthSpec build() const {
    if (!spec_path.empty()) return synth_spec_from_json(read_json(spec_path));
    Json m{{"family", margin}, {"mu", mu}, {"s", s}, {"u", u},
           {"zeta", zeta},     {"sigma", sigma}, {"xi", xi}};
    Json j{{"margin_x", m},
           {"margin_y", m},
           {"dependence", {{"family", dependence}, {"rho", rho}, {"theta", theta}}},
           {"n_total", n},
           {"seed", seed}};
    return synth_spec_from_json(j);
  }
};

struct Common {
  PipelineConfig cfg;
  std::string unit = "mw";
  std::string spec_path;
  std::string jackknife = "loo";
  std::string acceleration = "standard";
  std::string sweep;
  std::string out;
  double ux = NAN, uy = NAN;

  void finish() {
    cfg.unit = parse_unit(unit);
    if (!spec_path.empty()) cfg.spec = synth_spec_from_json(read_json(spec_path));
    if (std::isfinite(ux)) cfg.ux = ux;
    if (std::isfinite(uy)) cfg.uy = uy;
    cfg.jackknife = jackknife == "first" ? JackknifeMode::LeaveFirstJ : JackknifeMode::LeaveOneOut;
    cfg.acceleration =
        acceleration == "literal" ? AccelerationSign::Literal : AccelerationSign::Standard;
    cfg.out_dir = out;
    cfg.validate();
  }
};

void add_input_options(CLI::App* app, Common& c) {
  app->add_option("--input,-i", c.cfg.input, "CSV with header timestamp,rx1,rx2");
  app->add_option("--spec", c.spec_path, "synthetic spec JSON used instead of --input");
  app->add_option("--unit", c.unit, "power unit of the CSV")->check(CLI::IsMember({"dbm", "mw"}));
  app->add_option("--groups", c.cfg.groups, "stationary row ranges a:b,c:d");
  app->add_option("--group", c.cfg.group, "index of the range to analyse");
  app->add_option("--cluster", c.cfg.cluster_size, "declustering cluster size");
  app->add_option("--split", c.cfg.split,
                  "chronological training share; about 1/eps training samples are advised");
  app->add_option("--seed", c.cfg.seed, "random seed");
  app->add_flag("--skip-adf", c.cfg.skip_adf, "skip the stationarity gate");
  app->add_option("--adf-level", c.cfg.adf_level, "ADF significance level (0.01, 0.05, 0.10)");
  app->add_option("--adf-lag", c.cfg.adf_lag, "ADF lag order (default: Schwert rule)");
  app->add_option("--adf-samples", c.cfg.adf_max_samples, "leading samples used by the ADF test");
}

void add_model_options(CLI::App* app, Common& c) {
  add_input_options(app, c);
  app->add_option("--ux", c.ux, "explicit rx1 threshold (mW)");
  app->add_option("--uy", c.uy, "explicit rx2 threshold (mW)");
  app->add_option("--pp-bound", c.cfg.pp_bound, "probability plot deviation bound");
  app->add_flag("--symmetric", c.cfg.symmetric, "fit a symmetric Beta angular law");
}

void add_rate_options(CLI::App* app, Common& c) {
  app->add_option("--eps", c.cfg.eps_list, "target outage probabilities")->delimiter(',');
  app->add_flag("--radial-diagnostic", c.cfg.radial_diagnostic,
                "also report the radial reading of the outage variable");
  app->add_option("--sweep", c.sweep, "CSV file receiving one row per eps");
}

void add_ci_options(CLI::App* app, Common& c) {
  app->add_option("--alpha", c.cfg.alpha_list, "interval levels (1 - confidence)")->delimiter(',');
  app->add_option("--bootstrap,-B", c.cfg.bootstrap_rounds, "bootstrap rounds");
  app->add_option("--jackknife", c.jackknife, "jackknife scheme")
      ->check(CLI::IsMember({"loo", "first"}));
  app->add_option("--acceleration", c.acceleration, "acceleration sign convention")
      ->check(CLI::IsMember({"standard", "literal"}));
  app->add_flag("--full-bootstrap", c.cfg.full_bootstrap,
                "also bootstrap the whole rate chain over joint samples");
}

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

Json diagnose(Analysis& a) {
  Json j;
  stage_load(a);
  stage_stationarity(a, false);
  if (a.adf_x) j["stationarity"] = Json{{"rx1", to_json(*a.adf_x)}, {"rx2", to_json(*a.adf_y)}};
  stage_decluster(a);
  j["decluster"] = Json{{"n", a.seq_x.n()}, {"n_train", a.n_train}, {"n_test", a.n_test}};
  stage_gate(a, false);
  j["gate"] = to_json(a.gate);
  stage_thresholds(a);
  j["thresholds"] = Json{{"ux", a.ux}, {"uy", a.uy}};
  if (a.diag_x) {
    j["rx1"] = to_json(*a.diag_x);
    j["rx2"] = to_json(*a.diag_y);
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bivariate lower-tail rate selection for ultra-reliable links"};
  app.require_subcommand(1);
  unsigned threads = 1;
  std::string simd_name = "auto";
  app.add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
  app.add_option("--simd", simd_name, "kernel set")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "write a synthetic two-channel trace");
  synth->add_option("--spec", sf.spec_path, "spec JSON (overrides the flags)");
  synth->add_option("--out,-o", sf.out, "output CSV")->required();
  synth->add_option("--unit", sf.unit, "unit written")->check(CLI::IsMember({"dbm", "mw"}));
  synth->add_option("--margin", sf.margin, "margin family")
      ->check(CLI::IsMember({"gpd_gaussian", "gaussian", "lognormal"}));
  synth->add_option("--dependence", sf.dependence, "dependence family")
      ->check(CLI::IsMember({"independent", "gaussian_copula", "logistic"}));
  synth->add_option("--mu", sf.mu);
  synth->add_option("--s", sf.s);
  synth->add_option("--u", sf.u);
  synth->add_option("--zeta", sf.zeta);
  synth->add_option("--sigma", sf.sigma);
  synth->add_option("--xi", sf.xi);
  synth->add_option("--rho", sf.rho);
  synth->add_option("--theta", sf.theta);
  synth->add_option("--n", sf.n, "number of rows");
  synth->add_option("--seed", sf.seed);

  Common c;
  auto* diag = app.add_subcommand("diagnose", "stationarity, gate and threshold diagnostics");
  add_model_options(diag, c);
  auto* fit = app.add_subcommand("fit", "fit both tails and the angular law");
  add_model_options(fit, c);
  auto* rate = app.add_subcommand("rate", "select the rate for each eps");
  add_model_options(rate, c);
  add_rate_options(rate, c);
  auto* outage = app.add_subcommand("outage", "empirical outage on the test split");
  add_model_options(outage, c);
  add_rate_options(outage, c);
  auto* ci = app.add_subcommand("ci", "bootstrap confidence intervals");
  add_model_options(ci, c);
  add_rate_options(ci, c);
  add_ci_options(ci, c);
  auto* base = app.add_subcommand("baseline", "parametric extrapolation baseline");
  add_model_options(base, c);
  add_rate_options(base, c);
  base->add_flag("--baseline-bulk", c.cfg.baseline_bulk, "fit baseline margins to the bulk only");
  auto* cmp = app.add_subcommand("compare", "CSV comparing the tail model and the baseline");
  add_model_options(cmp, c);
  add_rate_options(cmp, c);
  cmp->add_flag("--baseline-bulk", c.cfg.baseline_bulk, "fit baseline margins to the bulk only");
  cmp->add_option("--out,-o", c.out, "output CSV (stdout when omitted)");
  auto* run = app.add_subcommand("run", "full pipeline writing every artifact");
  add_model_options(run, c);
  add_rate_options(run, c);
  add_ci_options(run, c);
  run->add_flag("--baseline-bulk", c.cfg.baseline_bulk, "fit baseline margins to the bulk only");
  run->add_option("--out,-o", c.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  simd::Isa isa{};
  simd::parse_isa(simd_name, isa);
  if (simd_name != "auto") simd::set_isa(isa);
  c.cfg.threads = threads;

  try {
    if (synth->parsed()) {
      const SynthSpec spec = sf.build();
      const auto [x, y] = generate(spec, threads);
      write_trace_csv(sf.out, x, y, parse_unit(sf.unit));
      return kExitOk;
    }
    c.finish();
    if (run->parsed()) return run_pipeline(c.cfg);

    if (diag->parsed()) {
      Analysis a;
      a.config = c.cfg;
      print(diagnose(a));
      return kExitOk;
    }
    Analysis a = analyse_to_model(c.cfg);
    if (fit->parsed()) {
      print(Json{{"rx1", to_json(a.tail_x)},
                 {"rx2", to_json(a.tail_y)},
                 {"validation", {{"rx1", to_json(a.fit_x)}, {"rx2", to_json(a.fit_y)}}},
                 {"model", to_json(a.model)}});
      return kExitOk;
    }
    stage_rates(a);
    if (rate->parsed()) {
      Json out = Json::array();
      for (const RateDecision& d : a.rates) {
        out.push_back(to_json(d));
        if (!c.sweep.empty()) append_rate_csv(c.sweep, d, a.n_train);
      }
      print(out.size() == 1 ? out[0] : out);
      return kExitOk;
    }
    if (base->parsed()) {
      const BaselineReport b = stage_baseline(a);
      if (!c.sweep.empty()) {
        for (const RateDecision& d : b.rates) append_rate_csv(c.sweep, d, a.n_train);
      }
      print(to_json(b));
      return kExitOk;
    }
    stage_outage(a);
    if (outage->parsed()) {
      Json out = Json::array();
      for (const OutageReport& o : a.outages) {
        out.push_back(to_json(o));
        if (!c.sweep.empty()) append_outage_csv(c.sweep, o);
      }
      print(out.size() == 1 ? out[0] : out);
      return kExitOk;
    }
    if (ci->parsed()) {
      print(to_json(stage_ci(a)));
      return kExitOk;
    }
    if (cmp->parsed()) {
      const BaselineReport b = stage_baseline(a);
      write_compare_csv(c.out.empty() ? std::string("/dev/stdout") : c.out, a, b);
      return kExitOk;
    }
  } catch (const GateStop& g) {
    std::cerr << "mevt: stopped at gate '" << g.gate() << "': " << g.what() << '\n';
    return kExitGate;
  } catch (const Error& e) {
    std::cerr << "mevt: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "mevt: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}
