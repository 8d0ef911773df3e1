#pragma once

// End-to-end orchestration shared by the command-line subcommands.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mevt/baseline.hpp"
#include "mevt/bivariate.hpp"
#include "mevt/confidence.hpp"
#include "mevt/error.hpp"
#include "mevt/io.hpp"
#include "mevt/rate.hpp"
#include "mevt/synth.hpp"
#include "mevt/tail_fit.hpp"
#include "mevt/trace.hpp"

namespace mevt {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitGate = 3, kExitNumerical = 4 };

/// Exit code for an error category: input-side kinds map to 2, the rest to 4.
int exit_code_for(ErrorKind kind) noexcept;

/// A pipeline gate refused to continue (non-stationary input, independent
/// tails, failed tail validation).
class GateStop : public std::runtime_error {
 public:
  GateStop(std::string gate, const std::string& what)
      : std::runtime_error(what), gate_(std::move(gate)) {}
  const std::string& gate() const noexcept { return gate_; }

 private:
  std::string gate_;
};

struct PipelineConfig {
  std::string input;                // CSV path
  std::optional<SynthSpec> spec;    // generate the input instead of reading it
  Unit unit = Unit::Milliwatt;
  std::string groups;               // "a:b,c:d" row ranges
  std::size_t group = 0;            // which range to analyse
  std::size_t cluster_size = 1;
  double autocorrelation_bound = 0.1;
  std::optional<double> ux, uy;     // explicit thresholds; automatic otherwise
  ThresholdGrid grid;
  std::vector<double> eps_list{1e-3, 1e-4, 1e-5};
  std::vector<double> alpha_list{0.05};
  std::size_t bootstrap_rounds = 1000;
  std::uint64_t seed = 1;
  double split = 0.5;               // chronological training share
  std::string out_dir;
  unsigned threads = 1;
  bool skip_adf = false;
  double adf_level = 0.05;
  std::optional<std::size_t> adf_lag;
  std::size_t adf_max_samples = 100000;  // leading samples fed to the ADF test
  double pp_bound = 0.05;
  bool symmetric = false;
  JackknifeMode jackknife = JackknifeMode::LeaveOneOut;
  AccelerationSign acceleration = AccelerationSign::Standard;
  bool baseline_bulk = false;
  bool full_bootstrap = false;
  bool radial_diagnostic = false;

  /// Argument error on out-of-range values.
  void validate() const;
};

Json to_json(const PipelineConfig& c);

/// Intermediate results of the stages in pipeline order.
struct Analysis {
  PipelineConfig config;
  PowerTrace raw_x, raw_y;
  std::optional<StationarityReport> adf_x, adf_y;
  IidSequence seq_x, seq_y;  // declustered, full length
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  GateResult gate;
  std::optional<ThresholdDiagnostics> diag_x, diag_y;
  double ux = 0.0, uy = 0.0;
  TailModel tail_x, tail_y;
  FitDiagnostics fit_x, fit_y;
  BgpdModel model;    // training data
  BgpdModel z_model;  // training + test data at the same thresholds
  std::vector<RateDecision> rates;
  std::vector<OutageReport> outages;

  std::span<const double> train_x() const { return {seq_x.values.data(), n_train}; }
  std::span<const double> train_y() const { return {seq_y.values.data(), n_train}; }
  std::span<const double> test_x() const { return std::span(seq_x.values).subspan(n_train); }
  std::span<const double> test_y() const { return std::span(seq_y.values).subspan(n_train); }
};

// Stages. Each requires the previous ones; gates throw GateStop.
void stage_load(Analysis& a);
void stage_stationarity(Analysis& a, bool gate = true);
void stage_decluster(Analysis& a);
void stage_gate(Analysis& a, bool gate = true);
void stage_thresholds(Analysis& a);
void stage_fit(Analysis& a, bool gate = true);
void stage_joint(Analysis& a);
void stage_rates(Analysis& a);
void stage_outage(Analysis& a);

/// Runs the stages through the joint model (inclusive).
Analysis analyse_to_model(const PipelineConfig& config);

struct CiReport {
  GpdResamples resamples_x, resamples_y;
  std::vector<double> alphas;
  std::vector<GpdIntervals> intervals_x, intervals_y;  // per alpha
  std::vector<RateInterval> rate_intervals;            // per (alpha, eps), alpha-major
  std::vector<IntervalEstimate> pipeline_bootstrap;    // same order, when enabled
};

CiReport stage_ci(const Analysis& a);
Json to_json(const CiReport& r);

struct BaselineReport {
  MarginSelection selection_x, selection_y;
  ExtrapolatedModel model;
  ExtrapolatedModel z_model;
  std::vector<RateDecision> rates;
  std::vector<OutageReport> outages;
};

BaselineReport stage_baseline(const Analysis& a);
Json to_json(const BaselineReport& r);

/// (eps, n, rate_mevt, rate_baseline, outage_mevt, outage_baseline) rows.
void write_compare_csv(const std::string& path, const Analysis& a, const BaselineReport& b);

/// Audit chain summary: thresholds, tails, angular fit, max_r and the rate chain.
Json audit_json(const Analysis& a);

/// Full run writing every stage artifact to config.out_dir. Returns the exit
/// code; gate stops and stage errors are written to report.json as well.
int run_pipeline(const PipelineConfig& config);

}  // namespace mevt
