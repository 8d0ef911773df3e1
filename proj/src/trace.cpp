#include "mevt/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mevt/error.hpp"
#include "mevt/simd.hpp"
#include "mevt/stats.hpp"

namespace mevt {

const char* to_string(Unit unit) noexcept { return unit == Unit::Dbm ? "dbm" : "mw"; }

Unit parse_unit(const std::string& text) {
  if (text == "dbm" || text == "dBm") return Unit::Dbm;
  if (text == "mw" || text == "mW") return Unit::Milliwatt;
  fail(ErrorKind::Argument, "unknown unit '" + text + "' (expected dbm or mw)");
}

double dbm_to_mw(double dbm) noexcept { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) noexcept { return 10.0 * std::log10(mw); }

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_power(std::string_view field, std::size_t line, Unit unit) {
  field = trim(field);
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(line, "line " + std::to_string(line) + ": cannot parse power value '" +
                               std::string(field) + "'");
  }
  if (!std::isfinite(v)) {
    fail(ErrorKind::Data, "line " + std::to_string(line) + ": non-finite power value");
  }
  if (unit == Unit::Dbm) return dbm_to_mw(v);
  if (!(v > 0.0)) {
    fail(ErrorKind::Data, "line " + std::to_string(line) + ": power in mW must be positive");
  }
  return v;
}

}  // namespace

TraceFile read_trace_csv(std::istream& in, Unit unit) {
  TraceFile file;
  file.rx1.receiver_id = "rx1";
  file.rx2.receiver_id = "rx2";
  file.rx1.source_unit = unit;
  file.rx2.source_unit = unit;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      std::string compact;
      for (char c : view) {
        if (c != ' ' && c != '\t') compact.push_back(c);
      }
      if (compact != "timestamp,rx1,rx2") {
        throw ParseError(line_no, "line " + std::to_string(line_no) +
                                      ": expected header 'timestamp,rx1,rx2'");
      }
      header_seen = true;
      continue;
    }
    const auto c1 = view.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
    if (c2 == std::string_view::npos || view.find(',', c2 + 1) != std::string_view::npos) {
      throw ParseError(line_no, "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    file.timestamps.emplace_back(trim(view.substr(0, c1)));
    file.rx1.samples.push_back(parse_power(view.substr(c1 + 1, c2 - c1 - 1), line_no, unit));
    file.rx2.samples.push_back(parse_power(view.substr(c2 + 1), line_no, unit));
  }
  if (!header_seen) throw ParseError(line_no == 0 ? 1 : line_no, "empty input: missing header");
  if (file.timestamps.empty()) throw ParseError(line_no, "input has a header but no data rows");
  return file;
}

TraceFile read_trace_csv(const std::string& path, Unit unit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open input file '" + path + "'");
  return read_trace_csv(in, unit);
}

PowerTrace ingest(const std::string& path, Unit unit, const std::string& receiver_id) {
  TraceFile file = read_trace_csv(path, unit);
  if (receiver_id == "rx1") return std::move(file.rx1);
  if (receiver_id == "rx2") return std::move(file.rx2);
  fail(ErrorKind::Argument, "unknown receiver '" + receiver_id + "' (expected rx1 or rx2)");
}

void write_trace_csv(const std::string& path, const PowerTrace& rx1, const PowerTrace& rx2,
                     Unit unit) {
  if (rx1.samples.size() != rx2.samples.size()) {
    fail(ErrorKind::Argument, "write_trace_csv: receivers differ in length");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Argument, "cannot write '" + path + "'");
  std::string buf;
  buf.reserve(1 << 20);
  buf += "timestamp,rx1,rx2\n";
  char num[64];
  const auto put = [&](double v) {
    const double w = unit == Unit::Dbm ? mw_to_dbm(v) : v;
    const auto res = std::to_chars(num, num + sizeof num, w);
    buf.append(num, res.ptr);
  };
  for (std::size_t i = 0; i < rx1.samples.size(); ++i) {
    buf += std::to_string(i);
    buf += ',';
    put(rx1.samples[i]);
    buf += ',';
    put(rx2.samples[i]);
    buf += '\n';
    if (buf.size() > (1 << 20) - 128) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorKind::Argument, "failed writing '" + path + "'");
}

std::size_t schwert_lag(std::size_t n) noexcept {
  return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

double adf_critical_value(double level, std::size_t nobs) {
  const double t = static_cast<double>(nobs);
  const double i1 = 1.0 / t;
  if (std::fabs(level - 0.01) < 1e-12) {
    return -3.43035 - 6.5393 * i1 - 16.786 * i1 * i1 - 79.433 * i1 * i1 * i1;
  }
  if (std::fabs(level - 0.05) < 1e-12) {
    return -2.86154 - 2.8903 * i1 - 4.234 * i1 * i1 - 40.040 * i1 * i1 * i1;
  }
  if (std::fabs(level - 0.10) < 1e-12) return -2.56677 - 1.5384 * i1 - 2.809 * i1 * i1;
  fail(ErrorKind::Argument, "ADF level must be 0.01, 0.05 or 0.10");
}

namespace {

// Least squares by Householder QR. Returns the coefficient vector and the
// diagonal of (X'X)^-1 scaled by the residual variance. X is column-major.
struct OlsResult {
  std::vector<double> beta;
  std::vector<double> se;
};

OlsResult ols_qr(std::vector<double> x, std::vector<double> y, std::size_t rows, std::size_t cols) {
  std::vector<double> col_norm(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += x[j * rows + i] * x[j * rows + i];
    col_norm[j] = std::sqrt(s);
  }
  std::vector<double> rdiag(cols);
  for (std::size_t k = 0; k < cols; ++k) {
    double* ck = x.data() + k * rows;
    double norm = 0.0;
    for (std::size_t i = k; i < rows; ++i) norm += ck[i] * ck[i];
    norm = std::sqrt(norm);
    if (!(norm > 1e-10 * col_norm[k]) || col_norm[k] == 0.0) {
      fail(ErrorKind::Numerical, "ADF regression matrix is singular (zero-variance regressor)");
    }
    const double alpha = ck[k] > 0.0 ? -norm : norm;
    ck[k] -= alpha;  // v = x - alpha e_k
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < rows; ++i) vnorm2 += ck[i] * ck[i];
    const auto reflect = [&](double* c) {
      double dot = 0.0;
      for (std::size_t i = k; i < rows; ++i) dot += ck[i] * c[i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = k; i < rows; ++i) c[i] -= f * ck[i];
    };
    for (std::size_t j = k + 1; j < cols; ++j) reflect(x.data() + j * rows);
    reflect(y.data());
    rdiag[k] = alpha;
  }
  // R is stored above the diagonal of x, with diagonal rdiag.
  const auto r = [&](std::size_t i, std::size_t j) { return i == j ? rdiag[i] : x[j * rows + i]; };
  OlsResult res;
  res.beta.assign(cols, 0.0);
  for (std::size_t ii = cols; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < cols; ++j) s -= r(ii, j) * res.beta[j];
    res.beta[ii] = s / rdiag[ii];
  }
  double rss = 0.0;
  for (std::size_t i = cols; i < rows; ++i) rss += y[i] * y[i];
  const double sigma2 = rss / static_cast<double>(rows - cols);
  // Rinv by back substitution, then diag(Rinv Rinv').
  std::vector<double> rinv(cols * cols, 0.0);  // row-major
  for (std::size_t j = 0; j < cols; ++j) {
    rinv[j * cols + j] = 1.0 / rdiag[j];
    for (std::size_t ii = j; ii-- > 0;) {
      double s = 0.0;
      for (std::size_t k = ii + 1; k <= j; ++k) s += r(ii, k) * rinv[k * cols + j];
      rinv[ii * cols + j] = -s / rdiag[ii];
    }
  }
  res.se.assign(cols, 0.0);
  for (std::size_t ii = 0; ii < cols; ++ii) {
    double s = 0.0;
    for (std::size_t k = ii; k < cols; ++k) s += rinv[ii * cols + k] * rinv[ii * cols + k];
    res.se[ii] = std::sqrt(sigma2 * s);
  }
  return res;
}

}  // namespace

StationarityReport adf_test(std::span<const double> series, std::size_t lag_order, double level) {
  const std::size_t n = series.size();
  if (n <= 10 * (lag_order + 2)) {
    fail(ErrorKind::Argument, "ADF needs more than 10 * (lag_order + 2) samples");
  }
  StationarityReport rep;
  rep.lag_order = lag_order;
  rep.level = level;
  const std::size_t p = lag_order;
  const std::size_t rows = n - 1 - p;
  const std::size_t cols = p + 2;
  std::vector<double> dy(n - 1);
  for (std::size_t t = 1; t < n; ++t) dy[t - 1] = series[t] - series[t - 1];
  std::vector<double> x(rows * cols);
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + p;  // index into dy
    y[r] = dy[t];
    x[r] = 1.0;
    x[rows + r] = series[t];  // y_{t-1} for dy[t] = series[t+1] - series[t]
    for (std::size_t j = 1; j <= p; ++j) x[(j + 1) * rows + r] = dy[t - j];
  }
  const OlsResult fit = ols_qr(std::move(x), std::move(y), rows, cols);
  if (!(fit.se[1] > 0.0)) fail(ErrorKind::Numerical, "ADF regression has zero residual variance");
  rep.test_statistic = fit.beta[1] / fit.se[1];
  rep.nobs = rows;
  rep.critical_values = {{"1%", adf_critical_value(0.01, rows)},
                         {"5%", adf_critical_value(0.05, rows)},
                         {"10%", adf_critical_value(0.10, rows)}};
  rep.is_stationary = rep.test_statistic < adf_critical_value(level, rows);
  return rep;
}

StationarityReport adf_test(const PowerTrace& trace, std::size_t lag_order, double level) {
  return adf_test(trace.samples, lag_order, level);
}

double lag1_autocorrelation(std::span<const double> v) {
  if (v.size() < 3) return 0.0;
  const double m = mean(v);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - m;
    den += d * d;
    if (i + 1 < v.size()) num += d * (v[i + 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

IidSequence decluster(std::span<const double> samples, std::size_t cluster_size,
                      double autocorrelation_bound, std::string source) {
  if (cluster_size == 0) fail(ErrorKind::Argument, "cluster_size must be at least 1");
  if (samples.size() < cluster_size) {
    fail(ErrorKind::Argument, "trace is shorter than one cluster");
  }
  IidSequence seq;
  seq.source = std::move(source);
  seq.cluster_size = cluster_size;
  seq.values.resize(samples.size() / cluster_size);
  simd::block_minima(samples, cluster_size, seq.values);
  seq.lag1_autocorrelation = lag1_autocorrelation(seq.values);
  seq.autocorrelation_bound = autocorrelation_bound;
  seq.independence_ok = std::fabs(seq.lag1_autocorrelation) < autocorrelation_bound;
  return seq;
}

IidSequence decluster(const PowerTrace& trace, std::size_t cluster_size,
                      double autocorrelation_bound) {
  return decluster(trace.samples, cluster_size, autocorrelation_bound, trace.receiver_id);
}

const char* to_string(GateVerdict verdict) noexcept {
  switch (verdict) {
    case GateVerdict::DiversityReasonable: return "DiversityReasonable";
    case GateVerdict::TooCorrelated: return "TooCorrelated";
    case GateVerdict::TailsIndependent: return "TailsIndependent";
  }
  return "unknown";
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::Argument, "pearson: length mismatch");
  if (x.size() < 2) fail(ErrorKind::Argument, "pearson: need at least two pairs");
  const auto m = simd::moments2(x, y);
  if (!(m.sxx > 0.0) || !(m.syy > 0.0)) {
    fail(ErrorKind::Numerical, "correlation undefined: zero variance");
  }
  return m.sxy / std::sqrt(m.sxx * m.syy);
}

GateResult correlation_gate(const IidSequence& x, const IidSequence& y, double tail_quantile) {
  GateResult g;
  g.pearson = pearson(x.values, y.values);
  const double qx = empirical_quantile(x.values, tail_quantile);
  const double qy = empirical_quantile(y.values, tail_quantile);
  std::vector<double> tx;
  std::vector<double> ty;
  for (std::size_t i = 0; i < x.n(); ++i) {
    if (x.values[i] < qx && y.values[i] < qy) {
      tx.push_back(x.values[i]);
      ty.push_back(y.values[i]);
    }
  }
  g.tail_pairs = tx.size();
  if (tx.size() >= 3) {
    const auto m = simd::moments2(tx, ty);
    if (m.sxx > 0.0 && m.syy > 0.0) g.tail_pearson = m.sxy / std::sqrt(m.sxx * m.syy);
  }
  if (g.pearson >= 0.1 && g.pearson <= 0.5) {
    g.verdict = GateVerdict::DiversityReasonable;
  } else if (std::fabs(g.tail_pearson) < 0.1) {
    g.verdict = GateVerdict::TailsIndependent;
  } else {
    g.verdict = GateVerdict::TooCorrelated;
  }
  return g;
}

GroupRanges parse_groups(const std::string& text) {
  GroupRanges out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    std::size_t a = 0;
    std::size_t b = 0;
    const auto parse = [&](std::string_view s, std::size_t& v) {
      s = trim(s);
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return !s.empty() && ec == std::errc() && p == s.data() + s.size();
    };
    if (colon == std::string::npos ||
        !parse(std::string_view(item).substr(0, colon), a) ||
        !parse(std::string_view(item).substr(colon + 1), b) || b <= a) {
      fail(ErrorKind::Argument, "invalid group range '" + item + "' (expected a:b with a < b)");
    }
    out.emplace_back(a, b);
  }
  if (out.empty()) fail(ErrorKind::Argument, "empty group specification");
  return out;
}

}  // namespace mevt
