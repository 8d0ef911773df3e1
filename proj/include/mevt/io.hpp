#pragma once

// JSON and number formatting for reports. Doubles are written in the shortest
// form that parses back to the same value.

#include <string>

#include <json.hpp>

#include "mevt/baseline.hpp"
#include "mevt/bivariate.hpp"
#include "mevt/confidence.hpp"
#include "mevt/rate.hpp"
#include "mevt/synth.hpp"
#include "mevt/tail_fit.hpp"
#include "mevt/trace.hpp"

namespace mevt {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

inline constexpr int kModelFormatVersion = 1;

Json to_json(const BetaParams& b);
Json to_json(const TailModel& m);
Json to_json(const AngularModel& a);
Json to_json(const BgpdModel& m);
Json to_json(const RateDecision& d);
Json to_json(const OutageReport& r);
Json to_json(const IntervalEstimate& iv);
Json to_json(const BcaFactors& f);
Json to_json(const RateInterval& ri);
Json to_json(const StationarityReport& s);
Json to_json(const GateResult& g);
Json to_json(const ParametricMargin& m);
Json to_json(const ThresholdDiagnostics& d);
Json to_json(const FitDiagnostics& d);
Json to_json(const SynthSpec& s);

BetaParams beta_from_json(const Json& j);
TailModel tail_model_from_json(const Json& j);
AngularModel angular_from_json(const Json& j);
/// Restores the model; the Frechet and Pickands samples are recomputed from
/// the stored joint sample and checked against the stored max_r.
BgpdModel bgpd_from_json(const Json& j);
SynthSpec synth_spec_from_json(const Json& j);

/// Writes `j` with two-space indentation and a trailing newline.
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

}  // namespace mevt
