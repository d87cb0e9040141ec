#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hkest/conditions.hpp"
#include "hkest/error.hpp"
#include "hkest/profiles.hpp"

using namespace hkest;

TEST_CASE("direct jump: doubling profile converges") {
  const auto f = JumpProfile::poly(1, 1.0, 0.0);
  std::vector<double> radii{1, 2, 4, 8, 16, 32, 50};
  const auto rep = check_direct_jump(f, 1, radii);
  CHECK(rep.converged);
  CHECK(std::isfinite(rep.C3_hat));
  CHECK(rep.C3_hat > 0.0);
}

TEST_CASE("direct jump: exponential dichotomy around gamma = 1") {
  const auto radii = default_djp_radii();
  const auto bad = check_direct_jump(JumpProfile::exponential(1, 1.0, 0.0), 1, radii);
  CHECK_FALSE(bad.converged);
  // the ratio grows along the radii
  CHECK(bad.samples.back().ratio > 10.0 * bad.samples[3].ratio);
  const auto good = check_direct_jump(JumpProfile::exponential(1, 1.0, 1.5), 1, radii);
  CHECK(good.converged);
  CHECK(std::isfinite(good.C3_hat));
}

TEST_CASE("direct jump ratio is computed in log space far out") {
  const auto f = JumpProfile::exponential(1, 1.0, 2.0);
  bool ok = false;
  const double r = direct_jump_ratio(f, 1, 1500.0, {}, &ok);
  CHECK(ok);
  CHECK(std::isfinite(r));
  CHECK(r > 0.0);
}

TEST_CASE("sufficient criteria") {
  CHECK(check_djp_sufficient(JumpProfile::poly(1, 1.0, 0.0), 1) == DjpCriterion::Doubling);
  CHECK(check_djp_sufficient(JumpProfile::exponential(1, 1.0, 2.0), 1) == DjpCriterion::Tempered);
  CHECK(check_djp_sufficient(JumpProfile::exponential(2, 1.0, 1.6), 2) == DjpCriterion::LogConvex);
  CHECK(check_djp_sufficient(JumpProfile::exponential(1, 1.0, 0.5), 1) == DjpCriterion::Unknown);
}

TEST_CASE("constants of the log-power stable family") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(0.5));
  ConstantsOptions opt;
  opt.n0 = 5;
  opt.compute_C3 = false;
  const auto p = estimate_constants(m, opt);
  const double l1e = std::log(1.0 + std::numbers::e);
  CHECK(l1e == doctest::Approx(1.313262).epsilon(1e-6));
  CHECK(p.C6 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.C7 == doctest::Approx(std::sqrt(l1e)).epsilon(1e-12));
  CHECK(p.C7 == doctest::Approx(1.14597).epsilon(1e-5));
  CHECK(p.K == doctest::Approx(4.0 * l1e).epsilon(1e-12));
  CHECK(p.K2 == doctest::Approx(12.0 * l1e).epsilon(1e-12));
  CHECK(p.K2 == doctest::Approx(15.759).epsilon(1e-4));
  CHECK(p.K1 == doctest::Approx(2.0 * p.K));
  CHECK(p.K3 == doctest::Approx(4.0 * p.K));
  CHECK(p.C2 == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("constants of the exponential family with a power potential") {
  const double kappa = 1.5, gamma = 2.0, beta = 0.5;
  const Model m = make_model(JumpProfile::exponential(1, kappa, gamma), PotentialProfile::power(beta));
  ConstantsOptions opt;
  opt.n0 = 5;
  opt.compute_C3 = false;
  const auto p = estimate_constants(m, opt);
  const double ke = kappa * std::numbers::e;
  // the reciprocal of (ke/(gamma+ke))^beta, see the notes on C6
  CHECK(p.C6 == doctest::Approx(std::pow((gamma + ke) / ke, beta)).epsilon(1e-12));
  CHECK(p.C7 == doctest::Approx(std::pow(2.0 + gamma / kappa * std::log(2.0), beta)).epsilon(1e-12));
  CHECK(p.K4 == doctest::Approx(p.C6 * p.K2).epsilon(1e-14));
}

TEST_CASE("numeric constants agree with closed forms") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(2.0));
  ConstantsOptions opt;
  opt.n0 = 5;
  opt.compute_C3 = false;
  const auto closed = estimate_constants(m, opt);
  opt.force_numeric = true;
  const auto numeric = estimate_constants(m, opt);
  CHECK(numeric.C7 == doctest::Approx(closed.C7).epsilon(1e-6));
  CHECK(numeric.C6 == doctest::Approx(closed.C6).epsilon(1e-6));
}

TEST_CASE("growth conditions") {
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(2.0));
  const auto r = check_growth_conditions(m);
  CHECK(r.A1b);
  CHECK(r.A1c);
  CHECK(r.A3b);
  CHECK(r.A3c);
  CHECK(r.A4_monotone_ratio);
  const auto pw = PotentialProfile::power(1.5);
  CHECK(numeric_C7(pw) <= std::pow(2.0, 1.5) * (1.0 + 1e-12));
}

TEST_CASE("n0 selection") {
  const auto g = PotentialProfile::log_power(2.0);
  // g(n - 2) >= theta: (log(n-2))^2 >= 10 at n - 2 >= e^sqrt(10)
  const auto n0 = select_n0(g, 10.0);
  REQUIRE(n0.has_value());
  CHECK(eval_g(g, *n0 - 2.0) >= 10.0);
  CHECK(eval_g(g, *n0 - 3.0) < 10.0);
  // beta = 1/2 needs n0 beyond any cap
  CHECK_FALSE(select_n0(PotentialProfile::log_power(0.5), 22.0).has_value());
  const Model m = make_model(JumpProfile::poly(1, 1.0, 0.0), PotentialProfile::log_power(0.5));
  ConstantsOptions opt;
  opt.compute_C3 = false;
  const auto p = estimate_constants(m, opt);
  CHECK_FALSE(p.n0_threshold_met);
  CHECK(p.n0 >= 5);
}
