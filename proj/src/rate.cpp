#include "mevt/rate.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mevt/error.hpp"
#include "mevt/io.hpp"

namespace mevt {

namespace {

std::string describe(double max_r, double eps_n) {
  std::ostringstream os;
  os.precision(17);
  os << "max_r = " << max_r << ", eps_n = " << eps_n;
  return os.str();
}

}  // namespace

double compute_eps_n(BetaParams train, double max_r, BetaParams test, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) fail(ErrorKind::Domain, "compute_eps_n: eps outside (0, 1)");
  if (!(max_r < 0.0)) fail(ErrorKind::Domain, "compute_eps_n: max_r must be negative");
  const double h = beta_cdf(beta_inv_cdf(eps, test), train);
  return std::exp(2.0 / max_r * h);
}

double compute_eps_n(const BgpdModel& model, BetaParams test, double eps) {
  return compute_eps_n(model.angular.beta, model.max_r(), test, eps);
}

double invert_bgpd(BetaParams train, double max_r, double eps_n) {
  if (!(eps_n > 0.0 && eps_n <= 1.0)) {
    fail(ErrorKind::Domain, "invert_bgpd: eps_n outside (0, 1] (" + describe(max_r, eps_n) + ")");
  }
  double a = 0.5 * max_r * std::log(eps_n);
  // exp/log round trip may overshoot the unit interval by a few ulps
  constexpr double slack = 1e-12;
  if (!(a >= -slack && a <= 1.0 + slack)) {
    fail(ErrorKind::Domain, "invert_bgpd: argument " + std::to_string(a) +
                                " outside [0, 1] (" + describe(max_r, eps_n) + ")");
  }
  a = std::clamp(a, 0.0, 1.0);
  return beta_inv_cdf(a, train);
}

double invert_bgpd(const BgpdModel& model, double eps_n) {
  return invert_bgpd(model.angular.beta, model.max_r(), eps_n);
}

double rate_from_quantile(double w) { return std::log2(1.0 + w); }

RateDecision rate_chain(BetaParams train, double max_r, BetaParams test, double eps,
                        std::string model_ref) {
  RateDecision d;
  d.target_eps = eps;
  d.max_r = max_r;
  d.train_beta = train;
  d.test_beta = test;
  d.model_ref = std::move(model_ref);
  d.eps_n = compute_eps_n(train, max_r, test, eps);
  d.eps_n_exceeds_target = d.eps_n > eps;
  if (d.eps_n_exceeds_target) {
    d.warnings.emplace_back("eps_n exceeds the target eps");
  }
  if (d.eps_n < DBL_MIN) {
    d.eps_n_underflow = true;
    d.angular_arg = std::numeric_limits<double>::quiet_NaN();
    d.angular_quantile = 0.0;
    d.rate_bits = 0.0;
    d.warnings.emplace_back("eps_n underflows double precision; rate collapses to 0");
    return d;
  }
  d.angular_arg = std::clamp(0.5 * max_r * std::log(d.eps_n), 0.0, 1.0);
  d.angular_quantile = invert_bgpd(train, max_r, d.eps_n);
  d.rate_bits = rate_from_quantile(d.angular_quantile);
  return d;
}

RateDecision select_rate(const BgpdModel& model, double eps, BetaParams test,
                         std::string model_ref) {
  return rate_chain(model.angular.beta, model.max_r(), test, eps, std::move(model_ref));
}

BgpdModel fit_z_model(std::span<const double> x_full, std::span<const double> y_full,
                      const BgpdModel& train, bool symmetric) {
  return build_bgpd(x_full, y_full, train.tail_x.threshold_u, train.tail_y.threshold_u, symmetric);
}

OutageReport assess_outage(const RateDecision& decision, std::span<const double> test_x,
                           std::span<const double> test_y, double ux, double uy,
                           const std::function<double(double)>& prob_x,
                           const std::function<double(double)>& prob_y, BetaParams z_beta,
                           bool radial_diagnostic) {
  if (test_x.empty() || test_x.size() != test_y.size()) {
    fail(ErrorKind::Data, "assess_outage: test set is empty or the channels differ in length");
  }
  OutageReport r;
  r.target_eps = decision.target_eps;
  r.rate_bits = decision.rate_bits;
  r.n_test = test_x.size();
  double radial_bad = 0.0;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    const double x = test_x[i];
    const double y = test_y[i];
    if (!(x < ux && y < uy)) continue;
    ++r.joint_count;
    const double px = prob_x(x);
    const double py = prob_y(y);
    double omega;
    if (px <= 0.0 || py <= 0.0) {
      // beyond a fitted support: the Frechet value is infinite on that side
      if (px <= 0.0 && py <= 0.0) {
        omega = 0.5;
      } else {
        omega = px <= 0.0 ? 1.0 : 0.0;
      }
    } else {
      const double xt = -1.0 / std::log1p(-px);
      const double yt = -1.0 / std::log1p(-py);
      omega = xt / (xt + yt);
      if (radial_diagnostic) {
        const double rad = -(xt + yt) / static_cast<double>(test_x.size());
        if (rad < 0.0 || rad > 1.0) radial_bad += 1.0;
      }
    }
    if (rate_from_quantile(omega) < decision.rate_bits) ++r.violations;
  }
  r.empirical_outage = static_cast<double>(r.violations) / static_cast<double>(r.n_test);
  r.conditional_outage =
      r.joint_count ? static_cast<double>(r.violations) / static_cast<double>(r.joint_count) : 0.0;
  r.model_outage = beta_cdf(decision.angular_quantile, z_beta);
  r.satisfied = r.empirical_outage <= decision.target_eps;
  r.radial_diagnostic = radial_diagnostic;
  if (radial_diagnostic) {
    r.radial_out_of_domain = r.joint_count ? radial_bad / static_cast<double>(r.joint_count) : 0.0;
    if (radial_bad > 0.0) {
      r.warnings.emplace_back(
          "radial reading of Z leaves the [0, 1] domain of the Beta CDF on every joint sample");
    }
  }
  return r;
}

OutageReport assess_outage(const RateDecision& decision, std::span<const double> test_x,
                           std::span<const double> test_y, const BgpdModel& z_model,
                           bool radial_diagnostic) {
  const TailModel& tx = z_model.tail_x;
  const TailModel& ty = z_model.tail_y;
  return assess_outage(
      decision, test_x, test_y, tx.threshold_u, ty.threshold_u,
      [&](double x) { return tail_probability(tx, x); },
      [&](double y) { return tail_probability(ty, y); }, z_model.angular.beta, radial_diagnostic);
}

namespace {

std::ofstream open_append(const std::string& path, const char* header) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorKind::Data, "cannot open " + path + " for writing");
  if (fresh) out << header << '\n';
  return out;
}

}  // namespace

void append_rate_csv(const std::string& path, const RateDecision& d, std::size_t n_train) {
  std::ofstream out = open_append(
      path, "eps,n_train,eps_n,angular_arg,angular_quantile,rate_bits,max_r,underflow");
  out << format_double(d.target_eps) << ',' << n_train << ',' << format_double(d.eps_n) << ','
      << format_double(d.angular_arg) << ',' << format_double(d.angular_quantile) << ','
      << format_double(d.rate_bits) << ',' << format_double(d.max_r) << ','
      << (d.eps_n_underflow ? 1 : 0) << '\n';
}

void append_outage_csv(const std::string& path, const OutageReport& r) {
  std::ofstream out = open_append(
      path, "eps,rate_bits,n_test,joint_count,violations,empirical_outage,model_outage,satisfied");
  out << format_double(r.target_eps) << ',' << format_double(r.rate_bits) << ',' << r.n_test << ','
      << r.joint_count << ',' << r.violations << ',' << format_double(r.empirical_outage) << ','
      << format_double(r.model_outage) << ',' << (r.satisfied ? 1 : 0) << '\n';
}

}  // namespace mevt
