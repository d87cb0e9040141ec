#include "hkest/profiles.hpp"

#include <limits>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hkest/error.hpp"
#include "hkest/quadrature.hpp"

namespace hkest {

namespace {

constexpr double kE = std::numbers::e;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dimension(int d) {
  if (d < 1) throw PreconditionError("dimension must be a positive integer");
}

// Index i with knots[i] <= r < knots[i+1]; caller guarantees knots[0] <= r < knots.back().
std::size_t segment(const std::vector<double>& knots, double r) {
  auto it = std::upper_bound(knots.begin(), knots.end(), r);
  return static_cast<std::size_t>(it - knots.begin()) - 1;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- JumpProfile

JumpProfile::JumpProfile(Family fam) : family_(std::move(fam)) {}

JumpProfile JumpProfile::poly(int d, double alpha, double gamma) {
  require_dimension(d);
  if (!(alpha > 0.0 && alpha < 2.0)) throw PreconditionError("Poly: alpha must lie in (0,2)");
  if (!(gamma >= 0.0)) throw PreconditionError("Poly: gamma must be >= 0");
  return JumpProfile(PolyJump{d, alpha, gamma});
}

JumpProfile JumpProfile::exponential(int d, double kappa, double gamma, std::optional<double> core_gamma) {
  require_dimension(d);
  if (!(kappa > 0.0)) throw PreconditionError("Exponential: kappa must be > 0");
  if (!(gamma >= 0.0)) throw PreconditionError("Exponential: gamma must be >= 0");
  if (core_gamma && !(*core_gamma >= 0.0)) throw PreconditionError("Exponential: core exponent must be >= 0");
  return JumpProfile(ExponentialJump{d, kappa, gamma, core_gamma});
}

JumpProfile JumpProfile::tabulated(int d, std::vector<double> knots, std::vector<double> values) {
  std::vector<double> logs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) throw PreconditionError("Tabulated: values must be positive");
    logs[i] = std::log(values[i]);
  }
  return tabulated_log(d, std::move(knots), std::move(logs));
}

JumpProfile JumpProfile::tabulated_log(int d, std::vector<double> knots, std::vector<double> log_values) {
  require_dimension(d);
  if (knots.size() < 2 || knots.size() != log_values.size())
    throw PreconditionError("Tabulated: need at least two knots with one value each");
  if (!(knots[0] > 0.0)) throw PreconditionError("Tabulated: knots must be positive");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) throw PreconditionError("Tabulated: knots must be strictly increasing");
    if (!(log_values[i] < log_values[i - 1]))
      throw PreconditionError("Tabulated: values must be strictly decreasing");
  }
  const std::size_t n = knots.size();
  const double p = -(log_values[n - 1] - log_values[n - 2]) / (std::log(knots[n - 1]) - std::log(knots[n - 2]));
  JumpProfile jp(TabulatedJump{d, std::move(knots), std::move(log_values)});
  jp.tail_exponent_ = p;
  return jp;
}

int JumpProfile::dimension() const {
  return std::visit([](const auto& f) { return f.d; }, family_);
}

double JumpProfile::log_value(double r) const {
  if (!(r > 0.0)) throw DomainError("profile evaluated at r <= 0");
  return std::visit(
      overloaded{
          [r](const PolyJump& p) { return -(p.d + p.alpha) * std::log(r) - p.gamma * std::log(std::max(kE, r)); },
          [r](const ExponentialJump& p) {
            const double g = (r >= 1.0) ? p.gamma : p.core_gamma.value_or(p.gamma);
            return -p.kappa * r - g * std::log(r);
          },
          [r, this](const TabulatedJump& p) {
            const auto& k = p.knots;
            const auto& v = p.log_values;
            if (r <= k.front()) return v.front();
            if (r >= k.back()) return v.back() - tail_exponent_ * std::log(r / k.back());
            const std::size_t i = segment(k, r);
            const double w = (r - k[i]) / (k[i + 1] - k[i]);
            return (1.0 - w) * v[i] + w * v[i + 1];
          }},
      family_);
}

double JumpProfile::value(double r) const { return std::exp(log_value(r)); }

double JumpProfile::log_derivative(double r) const {
  if (!(r > 0.0)) throw DomainError("profile evaluated at r <= 0");
  return std::visit(
      overloaded{[r](const PolyJump& p) { return -(p.d + p.alpha) / r - (r >= kE ? p.gamma / r : 0.0); },
                 [r](const ExponentialJump& p) {
                   const double g = (r >= 1.0) ? p.gamma : p.core_gamma.value_or(p.gamma);
                   return -p.kappa - g / r;
                 },
                 [r, this](const TabulatedJump& p) {
                   const auto& k = p.knots;
                   if (r < k.front()) return 0.0;
                   if (r >= k.back()) return -tail_exponent_ / r;
                   const std::size_t i = segment(k, r);
                   return (p.log_values[i + 1] - p.log_values[i]) / (k[i + 1] - k[i]);
                 }},
      family_);
}

double JumpProfile::tail_mass(double r) const {
  if (!(r > 0.0)) throw DomainError("tail mass needs r > 0");
  return std::visit(
      overloaded{
          [r](const PolyJump& p) {
            const double q = p.d - 1 + p.alpha;
            if (r >= kE) return std::pow(r, -q - p.gamma) / (q + p.gamma);
            return std::exp(-p.gamma) * (std::pow(r, -q) - std::pow(kE, -q)) / q +
                   std::pow(kE, -q - p.gamma) / (q + p.gamma);
          },
          [r, this](const ExponentialJump&) {
            QuadratureSettings q;
            q.abs_tol = 1e-15;
            q.rel_tol = 1e-12;
            auto fn = [this](double z) { return value(z); };
            if (r < 1.0) {
              QuadResult head = integrate(fn, r, 1.0, q);
              head += integrate_to_infinity(fn, 1.0, q);
              return head.value;
            }
            return integrate_to_infinity(fn, r, q).value;
          },
          [r, this](const TabulatedJump& p) {
            const auto& k = p.knots;
            const auto& v = p.log_values;
            const double p_exp = tail_exponent_;
            if (p_exp <= 1.0) return std::numeric_limits<double>::infinity();
            auto power_tail = [&](double from) {
              return std::exp(v.back()) * k.back() / (p_exp - 1.0) * std::pow(from / k.back(), 1.0 - p_exp);
            };
            if (r >= k.back()) return power_tail(r);
            double total = power_tail(k.back());
            // log f is affine on each segment, so each piece is an exact exponential integral.
            auto piece = [&](std::size_t i, double a, double b) {
              const double slope = (v[i + 1] - v[i]) / (k[i + 1] - k[i]);
              const double fa = v[i] + slope * (a - k[i]);
              const double fb = v[i] + slope * (b - k[i]);
              return (std::exp(fb) - std::exp(fa)) / slope;
            };
            std::size_t first = 0;
            double from = r;
            if (r < k.front()) {
              total += std::exp(v.front()) * (k.front() - r);
              from = k.front();
            } else {
              first = segment(k, r);
            }
            for (std::size_t i = first; i + 1 < k.size(); ++i) total += piece(i, std::max(from, k[i]), k[i + 1]);
            return total;
          }},
      family_);
}

double JumpProfile::second_moment(double r) const {
  if (!(r > 0.0)) return 0.0;
  return std::visit(
      overloaded{[r](const PolyJump& p) {
                   const double e3 = 3.0 - p.d - p.alpha;
                   if (e3 <= 0.0) return std::numeric_limits<double>::infinity();
                   const double scale = std::exp(-p.gamma);
                   if (r <= kE) return scale * std::pow(r, e3) / e3;
                   const double core = scale * std::pow(kE, e3) / e3;
                   const double e4 = e3 - p.gamma;
                   if (e4 == 0.0) return core + std::log(r / kE);
                   return core + (std::pow(r, e4) - std::pow(kE, e4)) / e4;
                 },
                 [r, this](const ExponentialJump& p) {
                   const double g = p.core_gamma.value_or(p.gamma);
                   if (g >= 3.0) return std::numeric_limits<double>::infinity();
                   QuadratureSettings q;
                   q.abs_tol = 1e-16;
                   q.rel_tol = 1e-12;
                   auto fn = [this](double z) { return z * z * value(z); };
                   // z^{2-g} near the origin is integrable but not smooth; a log variable resolves it.
                   const double lo = std::min(r, 1.0) * 1e-12;
                   const double core = std::pow(lo, 3.0 - g) / (3.0 - g);
                   QuadResult res = integrate_log_scale(fn, lo, std::min(r, 1.0), q);
                   if (r > 1.0) res += integrate(fn, 1.0, r, q);
                   return core + res.value;
                 },
                 [r, this](const TabulatedJump& p) {
                   const auto& k = p.knots;
                   const double c = std::exp(p.log_values.front());
                   if (r <= k.front()) return c * r * r * r / 3.0;
                   QuadratureSettings q;
                   q.abs_tol = 1e-16;
                   q.rel_tol = 1e-12;
                   std::vector<double> pts{k.front()};
                   for (double x : k)
                     if (x > k.front() && x < r) pts.push_back(x);
                   pts.push_back(r);
                   auto fn = [this](double z) { return z * z * value(z); };
                   return c * k.front() * k.front() * k.front() / 3.0 + integrate(fn, pts, q).value;
                 }},
      family_);
}

double JumpProfile::unit_crossing() const {
  double lo = 1e-300, hi = 1.0;
  if (std::holds_alternative<TabulatedJump>(family_)) {
    lo = std::get<TabulatedJump>(family_).knots.front();
    if (log_value(lo) < 0.0) return 0.0;
  }
  while (log_value(hi) >= 0.0) hi *= 2.0;
  while (lo > 1e-300 && log_value(lo) < 0.0) lo *= 0.5;
  for (int it = 0; it < 2000; ++it) {
    const double mid = (lo > 0.0 && hi / lo > 4.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (log_value(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

std::string JumpProfile::describe() const {
  return std::visit(
      overloaded{[](const PolyJump& p) {
                   return "Poly(d=" + std::to_string(p.d) + ", alpha=" + num(p.alpha) + ", gamma=" + num(p.gamma) + ")";
                 },
                 [](const ExponentialJump& p) {
                   std::string s = "Exponential(d=" + std::to_string(p.d) + ", kappa=" + num(p.kappa) +
                                   ", gamma=" + num(p.gamma);
                   if (p.core_gamma) s += ", core_gamma=" + num(*p.core_gamma);
                   return s + ")";
                 },
                 [](const TabulatedJump& p) {
                   return "Tabulated(d=" + std::to_string(p.d) + ", knots=" + std::to_string(p.knots.size()) +
                          ", heuristic tail)";
                 }},
      family_);
}

double eval_f(const JumpProfile& p, double r) { return p.value(r); }

double eval_f1(const JumpProfile& p, double r) { return std::min(p.value(r), 1.0); }

double abs_log_f(const JumpProfile& p, double r) {
  const double l = p.log_value(r);
  if (!(l < 0.0)) throw PreconditionError("abs_log_f requires f(r) < 1, got f(" + num(r) + ") >= 1");
  return -l;
}

// ---------------------------------------------------------------- LinkFunction

LinkFunction::LinkFunction(Family fam, double domain_start) : family_(std::move(fam)), domain_start_(domain_start) {}

LinkFunction LinkFunction::power_over_scale(double beta, double scale, double domain_start) {
  if (!(beta > 0.0)) throw PreconditionError("PowerOverScale: beta must be > 0");
  if (!(scale > 0.0)) throw PreconditionError("PowerOverScale: scale must be > 0");
  if (!(domain_start > 0.0)) throw PreconditionError("PowerOverScale: domain start must be > 0");
  LinkFunction h(PowerOverScaleLink{beta, scale}, domain_start);
  h.trend_ = beta > 1.0 ? RatioTrend::Increasing : (beta < 1.0 ? RatioTrend::Decreasing : RatioTrend::Constant);
  return h;
}

LinkFunction LinkFunction::tabulated(std::vector<double> knots, std::vector<double> values,
                                     std::optional<double> domain_start) {
  if (knots.size() < 3 || knots.size() != values.size())
    throw PreconditionError("Tabulated link: need at least three knots with one value each");
  if (!(knots[0] > 0.0)) throw PreconditionError("Tabulated link: knots must be positive");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) throw PreconditionError("Tabulated link: knots must be strictly increasing");
    if (!(values[i] > values[i - 1])) throw PreconditionError("Tabulated link: h must be increasing");
  }
  if (!(values[0] > 0.0)) throw PreconditionError("Tabulated link: values must be positive");
  int up = 0, down = 0;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double prev = values[i - 1] / knots[i - 1];
    const double cur = values[i] / knots[i];
    if (cur > prev * (1.0 + 1e-12)) ++up;
    else if (cur < prev * (1.0 - 1e-12)) ++down;
  }
  if (up > 0 && down > 0) throw PreconditionError("Tabulated link: h(s)/s is not monotone");
  const double start = domain_start.value_or(knots.front());
  if (start < knots.front()) throw PreconditionError("Tabulated link: domain start below the first knot");
  LinkFunction h(TabulatedLink{std::move(knots), std::move(values)}, start);
  h.trend_ = up > 0 ? RatioTrend::Increasing : (down > 0 ? RatioTrend::Decreasing : RatioTrend::Constant);
  return h;
}

double LinkFunction::operator()(double s) const {
  // Round-off from |log f(R0)| may land a few ulps below the domain start.
  if (s < domain_start_ * (1.0 - 1e-12))
    throw DomainError("link evaluated at s=" + num(s) + " below its domain start " + num(domain_start_));
  const double core = std::visit(
      overloaded{[s](const PowerOverScaleLink& p) { return std::pow(s / p.scale, p.beta); },
                 [s](const TabulatedLink& p) {
                   const auto& k = p.knots;
                   const auto& v = p.values;
                   const std::size_t n = k.size();
                   std::size_t i;
                   if (s >= k[n - 2]) i = n - 2;
                   else if (s <= k[0]) i = 0;
                   else i = segment(k, s);
                   const double slope = std::log(v[i + 1] / v[i]) / std::log(k[i + 1] / k[i]);
                   return v[i] * std::pow(s / k[i], slope);
                 }},
      family_);
  return factor_ * core;
}

LinkFunction LinkFunction::scaled(double c) const {
  if (!(c > 0.0)) throw PreconditionError("link scale factor must be > 0");
  LinkFunction h = *this;
  h.factor_ *= c;
  return h;
}

std::string LinkFunction::describe() const {
  std::string s = std::visit(
      overloaded{[](const PowerOverScaleLink& p) {
                   return "PowerOverScale(beta=" + num(p.beta) + ", scale=" + num(p.scale) + ")";
                 },
                 [](const TabulatedLink& p) { return "Tabulated(knots=" + std::to_string(p.knots.size()) + ")"; }},
      family_);
  if (factor_ != 1.0) s = num(factor_) + "*" + s;
  return s;
}

double eval_h(const LinkFunction& h, double s) { return h(s); }

// ---------------------------------------------------------------- PotentialProfile

PotentialProfile::PotentialProfile(Family fam, double R0) : family_(std::move(fam)), R0_(R0) {}

PotentialProfile PotentialProfile::log_power(double beta, std::optional<double> R0) {
  if (!(beta > 0.0)) throw PreconditionError("LogPower: beta must be > 0");
  const double r0 = R0.value_or(kE);
  if (!(r0 > 0.0)) throw PreconditionError("R0 must be > 0");
  return PotentialProfile(LogPowerPotential{beta}, r0);
}

PotentialProfile PotentialProfile::power(double beta, std::optional<double> R0) {
  if (!(beta > 0.0)) throw PreconditionError("Power: beta must be > 0");
  const double r0 = R0.value_or(1.0);
  if (!(r0 > 0.0)) throw PreconditionError("R0 must be > 0");
  return PotentialProfile(PowerPotential{beta}, r0);
}

PotentialProfile PotentialProfile::composed(const LinkFunction& h, const JumpProfile& f, double R0) {
  if (!(R0 > 0.0)) throw PreconditionError("R0 must be > 0");
  if (!(f.log_value(R0) < 0.0)) throw PreconditionError("Composed: f(R0) must be < 1");
  return PotentialProfile(ComposedPotential{h, f}, R0);
}

double PotentialProfile::operator()(double r) const {
  if (r < R0_) return factor_;
  const double core = std::visit(
      overloaded{[r](const LogPowerPotential& p) { return std::pow(std::max(1.0, std::log(r)), p.beta); },
                 [r](const PowerPotential& p) { return std::pow(std::max(1.0, r), p.beta); },
                 [r](const ComposedPotential& p) { return p.h(abs_log_f(p.f, r)); }},
      family_);
  return factor_ * core;
}

PotentialProfile PotentialProfile::scaled(double c) const {
  if (!(c > 0.0)) throw PreconditionError("potential scale factor must be > 0");
  PotentialProfile g = *this;
  g.factor_ *= c;
  return g;
}

std::string PotentialProfile::describe() const {
  std::string s = std::visit(
      overloaded{[](const LogPowerPotential& p) { return "LogPower(beta=" + num(p.beta) + ")"; },
                 [](const PowerPotential& p) { return "Power(beta=" + num(p.beta) + ")"; },
                 [](const ComposedPotential& p) { return "Composed(h=" + p.h.describe() + ", f=" + p.f.describe() + ")"; }},
      family_);
  s += " R0=" + num(R0_);
  if (factor_ != 1.0) s = num(factor_) + "*" + s;
  return s;
}

double eval_g(const PotentialProfile& p, double r) {
  if (r < 0.0) throw DomainError("potential evaluated at r < 0");
  return p(r);
}

// ---------------------------------------------------------------- Model

Model make_model(const JumpProfile& f, const PotentialProfile& potential) {
  if (const auto* c = std::get_if<ComposedPotential>(&potential.family()))
    return Model{f, potential, potential, c->h, ModelKind::Generic};

  if (const auto* lp = std::get_if<LogPowerPotential>(&potential.family())) {
    if (const auto* pj = std::get_if<PolyJump>(&f.family())) {
      if (potential.R0() == kE && potential.factor() == 1.0) {
        const double s0 = pj->d + pj->alpha + pj->gamma;
        LinkFunction h = LinkFunction::power_over_scale(lp->beta, s0, s0);
        // For r >= e, h(|log f(r)|) = (log r)^beta, so V itself is the composed profile.
        return Model{f, potential, potential, h, ModelKind::StableLogPower};
      }
    }
  }
  if (const auto* pw = std::get_if<PowerPotential>(&potential.family())) {
    if (const auto* ej = std::get_if<ExponentialJump>(&f.family())) {
      if (potential.R0() == 1.0 && potential.factor() == 1.0) {
        LinkFunction h = LinkFunction::power_over_scale(pw->beta, ej->kappa, ej->kappa);
        return Model{f, potential, PotentialProfile::composed(h, f, 1.0), h, ModelKind::RelativisticPower};
      }
    }
  }
  return Model{f, potential, potential, std::nullopt, ModelKind::Generic};
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::StableLogPower: return "poly-logpower";
    case ModelKind::RelativisticPower: return "exponential-power";
    case ModelKind::Generic: return "generic";
  }
  return "generic";
}

std::string to_string(RatioTrend t) {
  switch (t) {
    case RatioTrend::Increasing: return "increasing";
    case RatioTrend::Decreasing: return "decreasing";
    case RatioTrend::Constant: return "constant";
  }
  return "constant";
}

}  // namespace hkest
