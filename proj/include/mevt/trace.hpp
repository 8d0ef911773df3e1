#pragma once

// Channel trace ingestion, stationarity testing, declustering and the
// cross-channel correlation gate.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mevt {

enum class Unit { Dbm, Milliwatt };

const char* to_string(Unit unit) noexcept;
Unit parse_unit(const std::string& text);

double dbm_to_mw(double dbm) noexcept;
double mw_to_dbm(double mw) noexcept;

/// Received power of one receiver. Samples are always linear milliwatts;
/// `source_unit` records what the input file used.
struct PowerTrace {
  std::string receiver_id;
  std::vector<double> samples;
  Unit source_unit = Unit::Milliwatt;

  std::size_t sample_count() const noexcept { return samples.size(); }
};

/// Both receiver columns of an input file plus the timestamp column.
struct TraceFile {
  std::vector<std::string> timestamps;
  PowerTrace rx1;
  PowerTrace rx2;
};

/// Parses the `timestamp,rx1,rx2` CSV format. Throws ParseError with the
/// 1-based line number on malformed rows and Data errors on non-finite or
/// non-positive powers.
TraceFile read_trace_csv(std::istream& in, Unit unit);
TraceFile read_trace_csv(const std::string& path, Unit unit);

/// Loads one receiver column ("rx1" or "rx2") from a file.
PowerTrace ingest(const std::string& path, Unit unit, const std::string& receiver_id);

/// Writes the standard CSV format; powers are written in `unit`.
void write_trace_csv(const std::string& path, const PowerTrace& rx1, const PowerTrace& rx2,
                     Unit unit);

struct StationarityReport {
  double test_statistic = 0.0;
  std::size_t lag_order = 0;
  std::size_t nobs = 0;  // regression rows
  std::map<std::string, double> critical_values;  // "1%", "5%", "10%"
  double level = 0.05;
  bool is_stationary = false;
  std::optional<std::size_t> group_size_M;
};

/// Default lag order floor(12 (N/100)^(1/4)).
std::size_t schwert_lag(std::size_t n) noexcept;

/// MacKinnon finite-sample critical value for the constant-only ADF
/// regression at level 0.01, 0.05 or 0.10.
double adf_critical_value(double level, std::size_t nobs);

/// Augmented Dickey-Fuller test with intercept. level must be 0.01, 0.05 or 0.10.
StationarityReport adf_test(std::span<const double> series, std::size_t lag_order, double level);
StationarityReport adf_test(const PowerTrace& trace, std::size_t lag_order, double level);

/// Block minima of a trace: the declustered, approximately i.i.d. sequence.
struct IidSequence {
  std::string source;
  std::vector<double> values;
  std::size_t cluster_size = 1;
  double lag1_autocorrelation = 0.0;
  double autocorrelation_bound = 0.1;
  bool independence_ok = true;

  std::size_t n() const noexcept { return values.size(); }
};

double lag1_autocorrelation(std::span<const double> v);

IidSequence decluster(const PowerTrace& trace, std::size_t cluster_size,
                      double autocorrelation_bound = 0.1);
IidSequence decluster(std::span<const double> samples, std::size_t cluster_size,
                      double autocorrelation_bound = 0.1, std::string source = {});

enum class GateVerdict { DiversityReasonable, TooCorrelated, TailsIndependent };

const char* to_string(GateVerdict verdict) noexcept;

struct GateResult {
  double pearson = 0.0;
  double tail_pearson = 0.0;  // on pairs jointly below their tail quantiles
  std::size_t tail_pairs = 0;
  GateVerdict verdict = GateVerdict::TooCorrelated;
};

double pearson(std::span<const double> x, std::span<const double> y);

/// Diversity gate: DiversityReasonable when the Pearson coefficient lies in
/// [0.1, 0.5]; otherwise TailsIndependent when the coefficient on the joint
/// lower-tail subsample is below 0.1 in magnitude; otherwise TooCorrelated.
GateResult correlation_gate(const IidSequence& x, const IidSequence& y,
                            double tail_quantile = 0.1);

/// Half-open index ranges parsed from "a:b,c:d".
using GroupRanges = std::vector<std::pair<std::size_t, std::size_t>>;
GroupRanges parse_groups(const std::string& text);

}  // namespace mevt
