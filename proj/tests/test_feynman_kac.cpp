#include <doctest.h>

#include <cmath>
#include <random>

#include "hkest/error.hpp"
#include "hkest/feynman_kac.hpp"

using namespace hkest;

namespace {

const JumpProfile cauchy_f = JumpProfile::poly(1, 1.0, 0.0);
const LevySymbol cauchy(cauchy_f, LevySymbol::default_sigma0(cauchy_f));

PathConfig quick(long paths = 4000) {
  PathConfig c;
  c.n_paths = paths;
  c.time_step = 0.01;
  c.jump_cutoff = 0.05;
  return c;
}

}  // namespace

TEST_CASE("free paths have weight one") {
  const auto e = simulate_ut1(0.0, 2.0, [](double) { return 0.0; }, cauchy, quick());
  CHECK(e.mean == 1.0);
  CHECK(e.std_error == 0.0);
}

TEST_CASE("constant potential gives e^{-ct}") {
  const double c = 0.3, t = 2.0;
  const auto e = simulate_ut1(1.0, t, [c](double) { return c; }, cauchy, quick());
  CHECK(std::abs(e.mean - std::exp(-c * t)) <= 3.0 * e.std_error + 1e-12);
}

TEST_CASE("configuration limits") {
  PathConfig c = quick();
  c.time_step = 0.1;
  CHECK_THROWS_AS(c.validate(2.0), PreconditionError);
  c = quick();
  c.jump_cutoff = 0.0;
  CHECK_THROWS_AS(c.validate(2.0), PreconditionError);
}

TEST_CASE("jump sizes follow the normalized tail") {
  const double eps = 0.05;
  const JumpSizeSampler s(cauchy_f, eps);
  CHECK(s.radius(1.0) == doctest::Approx(eps));
  // tail of 1/z^2 above eps: P(|Z| > r) = eps / r
  for (double u : {0.5, 0.1, 1e-3, 1e-6}) CHECK(s.radius(u) == doctest::Approx(eps / u).epsilon(1e-6));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int above = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) above += s.radius(1.0 - U(gen)) > 0.5;
  const double p = 0.1;
  CHECK(std::abs(above / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("deterministic across runs and thread counts") {
  const auto V = as_grid_potential(PotentialProfile::log_power(2.0));
  const auto a = simulate_ut1(0.0, 2.0, V, cauchy, quick(), 1);
  const auto b = simulate_ut1(0.0, 2.0, V, cauchy, quick(), 3);
  const auto c = simulate_ut1(0.0, 2.0, V, cauchy, quick(), 1);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.mean == c.mean);
  CHECK(a.mean > 0.0);
  CHECK(a.mean <= 1.0);
}

TEST_CASE("estimates decrease away from the origin") {
  const auto V = as_grid_potential(PotentialProfile::log_power(2.0));
  double prev_mean = 2.0, prev_se = 0.0;
  for (double x0 : {0.0, 5.0, 10.0, 15.0}) {
    const auto e = simulate_ut1(x0, 2.0, V, cauchy, quick(20000));
    CHECK(prev_mean - e.mean > 3.0 * std::hypot(prev_se, e.std_error));
    prev_mean = e.mean;
    prev_se = e.std_error;
  }
}

TEST_CASE("convergence study") {
  const auto V = as_grid_potential(PotentialProfile::log_power(2.0));
  const auto rows = convergence_study(0.0, 2.0, V, cauchy, quick(10000));
  REQUIRE(rows.size() == 4);
  const double se = rows[0].estimate.std_error;
  CHECK(rows[3].estimate.std_error / se == doctest::Approx(0.5).epsilon(0.2));
  // halving the cutoff or the step moves the estimate less than the widened interval
  for (int k : {1, 2}) {
    const double widened = 3.0 * std::hypot(se, rows[k].estimate.std_error);
    CHECK(std::abs(rows[k].estimate.mean - rows[0].estimate.mean) < widened);
  }
}
