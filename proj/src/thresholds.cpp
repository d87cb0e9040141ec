#include "hkest/thresholds.hpp"

#include <limits>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "hkest/error.hpp"
#include "hkest/numeric.hpp"

namespace hkest {

namespace {

constexpr double kE = std::numbers::e;

const PowerOverScaleLink* power_link(const LinkFunction& h) {
  if (h.factor() != 1.0) return nullptr;
  return std::get_if<PowerOverScaleLink>(&h.family());
}

}  // namespace

RegimeClass classify(const LinkFunction& h) {
  if (const auto* p = std::get_if<PowerOverScaleLink>(&h.family())) {
    if (p->beta >= 1.0) return {Regime::AIUC, p->scale, Basis::ClosedForm};
    return {Regime::NonAIUC, std::numeric_limits<double>::infinity(), Basis::ClosedForm};
  }
  const auto& t = std::get<TabulatedLink>(h.family());
  const std::size_t n = t.knots.size();
  // Slope of log(h(s)/s) against log s over the three largest knots.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = n - 3; i < n; ++i) {
    const double x = std::log(t.knots[i]);
    const double y = std::log(t.values[i] / t.knots[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
  if (slope < -1e-9) return {Regime::NonAIUC, std::numeric_limits<double>::infinity(), Basis::NumericExtrapolation};
  double tau0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) tau0 = std::max(tau0, t.knots[i] / t.values[i]);
  return {Regime::AIUC, tau0, Basis::NumericExtrapolation};
}

std::optional<std::string> closed_form_tag(const JumpProfile& f, const LinkFunction& h) {
  const auto* p = power_link(h);
  if (!p) return std::nullopt;
  if (const auto* pj = std::get_if<PolyJump>(&f.family())) {
    const double s0 = pj->d + pj->alpha + pj->gamma;
    if (p->scale == s0 && h.domain_start() == s0) return "poly-logpower";
  }
  if (const auto* ej = std::get_if<ExponentialJump>(&f.family())) {
    if (p->scale == ej->kappa && h.domain_start() == ej->kappa) return "exponential-power";
  }
  return std::nullopt;
}

double start_radius(const JumpProfile& f, const LinkFunction& h) {
  if (auto tag = closed_form_tag(f, h)) return *tag == "poly-logpower" ? kE : 1.0;
  const double s0 = h.domain_start();
  auto reached = [&](double r) { return -f.log_value(r) >= s0; };
  double hi = 1.0;
  while (!reached(hi)) {
    hi *= 2.0;
    if (hi > 1e300) throw DomainError("|log f| never reaches the link's domain start");
  }
  double lo = hi;
  while (lo > 1e-300 && reached(lo)) lo *= 0.5;
  if (reached(lo)) return lo;
  return bisect_first_true(reached, lo, hi);
}

double lambda_of_r(const JumpProfile& f, const LinkFunction& h, double r) {
  const double s = abs_log_f(f, r);
  if (s < h.domain_start() * (1.0 - 1e-12))
    throw DomainError("Lambda evaluated below R0 (|log f(r)| < domain start of h)");
  return s / h(std::max(s, h.domain_start()));
}

double invert_exponential_exponent(double kappa, double gamma, double u) {
  if (!(u >= kappa)) throw DomainError("kappa r + gamma log r = u has no solution with r >= 1");
  auto reached = [&](double r) { return kappa * r + gamma * std::log(r) >= u; };
  return bisect_first_true(reached, 1.0, std::max(1.0, u / kappa));
}

double lambda_inv_numeric(const JumpProfile& f, const LinkFunction& h, double tau) {
  if (classify(h).kind == Regime::AIUC) return std::numeric_limits<double>::infinity();
  const double R0 = start_radius(f, h);
  const double l0 = lambda_of_r(f, h, R0);
  if (tau < l0) throw DomainError("tau below Lambda(R0)");
  auto above = [&](double r) { return lambda_of_r(f, h, r) > tau; };
  double hi = 2.0 * R0;
  while (!above(hi)) {
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  return bisect_first_true(above, R0, hi);
}

double lambda_inv(const JumpProfile& f, const LinkFunction& h, double tau) {
  if (classify(h).kind == Regime::AIUC) return std::numeric_limits<double>::infinity();
  auto tag = closed_form_tag(f, h);
  if (!tag) return lambda_inv_numeric(f, h, tau);
  const double beta = std::get<PowerOverScaleLink>(h.family()).beta;
  const double l0 = lambda_of_r(f, h, start_radius(f, h));
  if (tau < l0) throw DomainError("tau below Lambda(R0)");
  if (*tag == "poly-logpower") {
    const double s0 = std::get<PowerOverScaleLink>(h.family()).scale;
    return std::exp(std::pow(tau / s0, 1.0 / (1.0 - beta)));
  }
  const auto& ej = std::get<ExponentialJump>(f.family());
  const double u = std::pow(tau / std::pow(ej.kappa, beta), 1.0 / (1.0 - beta));
  return invert_exponential_exponent(ej.kappa, ej.gamma, u);
}

ThresholdData::ThresholdData(JumpProfile f, LinkFunction h)
    : f_(std::move(f)), h_(std::move(h)), R0_(start_radius(f_, h_)), regime_(classify(h_)),
      closed_(closed_form_tag(f_, h_)) {
  lambda_R0_ = lambda_of_r(f_, h_, R0_);
}

double ThresholdData::window_radius(double tau) const {
  if (regime_.kind == Regime::AIUC) return std::numeric_limits<double>::infinity();
  if (tau < lambda_R0_) return R0_;
  return lambda_inv(tau);
}

ThresholdLawCheck check_threshold_laws(const ThresholdData& td, double tau, std::span<const double> grid) {
  ThresholdLawCheck out;
  out.tau = tau;
  out.r_inv = td.lambda_inv(tau);
  std::vector<double> rs(grid.begin(), grid.end());
  std::sort(rs.begin(), rs.end());
  double prev = -std::numeric_limits<double>::infinity();
  for (double r : rs) {
    if (r < td.R0()) continue;
    ++out.points;
    const double log_f = td.f().log_value(r);
    const double g = td.h()(std::max(-log_f, td.h().domain_start()));
    const double lhs = -tau * g;  // log of e^{-tau g(r)}
    if (r < out.r_inv) {
      if (!(lhs <= log_f)) ++out.below_violations;
    } else {
      if (!(lhs >= log_f)) ++out.above_violations;
      const double gap = lhs - log_f;
      if (gap < prev) ++out.monotone_violations;
      prev = gap;
    }
  }
  return out;
}

std::string to_string(Regime r) { return r == Regime::AIUC ? "aIUC" : "non-aIUC"; }
std::string to_string(Basis b) { return b == Basis::ClosedForm ? "closed-form" : "numeric-extrapolation"; }

}  // namespace hkest
