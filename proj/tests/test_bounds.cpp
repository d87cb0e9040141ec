#include <doctest.h>

#include <cmath>
#include <functional>

#include "hkest/bounds.hpp"
#include "hkest/conditions.hpp"
#include "hkest/error.hpp"
#include "hkest/thresholds.hpp"

using namespace hkest;

namespace {

// Composite Simpson over [a, b] with n (even) panels.
double simpson(const std::function<double(double)>& fn, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = fn(a) + fn(b);
  for (int i = 1; i < n; ++i) s += fn(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Both halves of the 1D annulus n0+2 < |z| < R.
double brute_1d(const std::function<double(double)>& fn, double inner, double outer) {
  return simpson(fn, inner, outer, 100000) + simpson(fn, -outer, -inner, 100000);
}

// f1 at distance r, with the value 1 at r = 0 where f is infinite.
double f1(const JumpProfile& f, double r) { return r > 0.0 ? eval_f1(f, r) : 1.0; }

ConstantsPack pack_for(const Model& m, int n0 = 5) {
  ConstantsOptions opt;
  opt.n0 = n0;
  opt.compute_C3 = false;
  return estimate_constants(m, opt);
}

}  // namespace

TEST_CASE("F against a composite rule") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(0.5));
  const auto pack = pack_for(m);
  const double x = 20.0, y = 30.0, tau = 1.0;
  const auto F = eval_F(tau, on_axis(x), on_axis(y), pack, m.f, m.g);
  const double ref = brute_1d(
      [&](double z) {
        return f1(m.f, std::abs(x - z)) * f1(m.f, std::abs(z - y)) * std::exp(-tau * eval_g(m.g, std::abs(z)));
      },
      pack.n0 + 2.0, std::max(x, y));
  CHECK(F.value == doctest::Approx(ref).epsilon(1e-6));
  CHECK(eval_F(tau, on_axis(y), on_axis(x), pack, m.f, m.g).value == F.value);
}

TEST_CASE("G against a composite rule") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(0.5));
  const auto pack = pack_for(m);
  const double x = 20.0, tau = 2.0;
  const auto G = eval_G(tau, on_axis(x), pack, m.f, m.g);
  const double ref = brute_1d(
      [&](double z) { return f1(m.f, std::abs(x - z)) * std::exp(-tau * eval_g(m.g, std::abs(z))); },
      pack.n0 + 2.0, x);
  CHECK(G.value == doctest::Approx(ref).epsilon(1e-6));
  // g increases on the annulus, so e^{-tau g(n0+2)} bounds the exponential factor
  const double crude = brute_1d([&](double z) { return f1(m.f, std::abs(x - z)); }, pack.n0 + 2.0, x) *
                       std::exp(-tau * eval_g(m.g, pack.n0 + 2.0));
  CHECK(G.value <= crude);
}

TEST_CASE("H against a composite rule") {
  const Model m = make_model(JumpProfile::exponential(1, 1.0, 2.0), PotentialProfile::power(0.5));
  const auto pack = pack_for(m);
  const double x = 15.0, y = 20.0, tau = 1.0;
  const auto H = eval_H(tau, on_axis(x), on_axis(y), pack, m.f, m.g);
  const double ref = brute_1d(
      [&](double z) {
        const double a = std::abs(x - z), b = std::abs(z - y);
        return std::exp(-(a + b)) / (std::pow(std::max(1.0, a), 2.0) * std::pow(std::max(1.0, b), 2.0)) *
               std::exp(-tau * eval_g(m.g, std::abs(z)));
      },
      pack.n0 + 2.0, std::min(x, y));
  CHECK(H.value == doctest::Approx(ref).epsilon(1e-6));
  CHECK(eval_H(tau, on_axis(y), on_axis(x), pack, m.f, m.g).value == H.value);
}

TEST_CASE("property: F and G decrease to zero in tau") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(0.5));
  const auto pack = pack_for(m);
  double lastF = INFINITY, lastG = INFINITY;
  for (double tau = 0.5; tau < 600.0; tau *= 2.0) {
    const double F = eval_F(tau, on_axis(12.0), on_axis(25.0), pack, m.f, m.g).value;
    const double G = eval_G(tau, on_axis(25.0), pack, m.f, m.g).value;
    CHECK(F < lastF);
    CHECK(G < lastG);
    lastF = F;
    lastG = G;
  }
  CHECK(lastF < 1e-100);
}

TEST_CASE("heat kernel envelope by region") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(2.0));
  auto pack = pack_for(m);
  pack.lambda0_hat = 0.7;
  const double t = 40.0;
  const auto in = envelope_heat_kernel(t, on_axis(1.0), on_axis(-2.0), pack, m);
  CHECK(in.region == Region::BothInner);
  CHECK(in.lower == doctest::Approx(std::exp(-0.7 * t)));
  CHECK(in.upper == doctest::Approx(std::exp(-0.7 * t)));
  CHECK(in.result_id == "kernel.inner");

  const double x = 15.0;
  const auto mx = envelope_heat_kernel(t, on_axis(x), on_axis(3.0), pack, m);
  CHECK(mx.region == Region::Mixed);
  CHECK(mx.upper == doctest::Approx(std::exp(-0.7 * t) * eval_f(m.f, x) / eval_g(m.g, x)).epsilon(1e-12));

  CHECK_THROWS_AS(envelope_heat_kernel(30.0, on_axis(0.0), on_axis(0.0), pack, m), DomainError);
}

TEST_CASE("semigroup envelope") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(2.0));
  auto pack = pack_for(m);
  pack.lambda0_hat = 0.5;
  const auto in = envelope_ut1(40.0, on_axis(2.0), pack, m);
  CHECK(in.upper == doctest::Approx(std::exp(-20.0)));
  CHECK(in.result_id == "semigroup.inner");
}

TEST_CASE("closed forms: aIUC ground-state shape") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(2.0));
  auto pack = pack_for(m);
  pack.lambda0_hat = 1.0;
  const auto regime = classify(*m.h);
  const double t = aiuc_time_threshold(pack, regime) + 1.0;
  CHECK_THROWS_AS(simplified_bounds(regime, t - 2.0, on_axis(5.0), on_axis(6.0), pack, m), OutsideCoverageError);
  for (double x : {0.0, 5.0, 40.0}) {
    const double y = 12.0;
    const auto env = simplified_bounds(regime, t, on_axis(x), on_axis(y), pack, m);
    CHECK(env.result_id == "ground-state");
    auto prof = [](double r) { return 1.0 / ((1.0 + r) * (1.0 + r) * std::pow(std::max(1.0, std::log(r)), 2.0)); };
    // shape equals e^{-lambda0 t} profile(x) profile(y) up to a fixed constant
    const double ratio = env.upper / (std::exp(-t) * prof(x) * prof(y));
    CHECK(ratio > 0.01);
    CHECK(ratio < 100.0);
  }
}

TEST_CASE("closed forms: result id switches at the window") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(0.5));
  auto pack = pack_for(m);
  const auto regime = classify(*m.h);
  const ThresholdData td(m.f, *m.h);
  const double t = std::max(nonaiuc_time_threshold(pack, m), 60.0);
  const double w = td.window_radius(t / pack.K2);
  REQUIRE(std::isfinite(w));
  const auto inside = simplified_bounds(regime, t, on_axis(w * 0.99), on_axis(w * 1.5), pack, m);
  const auto outside = simplified_bounds(regime, t, on_axis(w * 1.01), on_axis(w * 1.5), pack, m);
  CHECK(inside.result_id == "piuc-window");
  CHECK(outside.result_id == "doubling-tail");
}
