#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hkest/error.hpp"
#include "hkest/numeric.hpp"
#include "hkest/quadrature.hpp"

using namespace hkest;

TEST_CASE("gauss-kronrod on smooth integrands") {
  const auto r = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));

  const auto g = integrate([](double x) { return std::exp(-x * x); }, -10.0, 10.0);
  CHECK(g.value == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("breakpoints handle kinks") {
  const std::vector<double> bp{-1.0, 0.0, 1.0};
  const auto r = integrate([](double x) { return std::abs(x); }, bp);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("semi-infinite and log-scale integrals") {
  const auto a = integrate_to_infinity([](double x) { return 1.0 / (x * x); }, 2.0);
  CHECK(a.value == doctest::Approx(0.5).epsilon(1e-10));
  const auto b = integrate_to_infinity([](double x) { return std::exp(-x); }, 0.0);
  CHECK(b.value == doctest::Approx(1.0).epsilon(1e-10));
  // int_1^1e8 dr / r = log 1e8
  const auto c = integrate_log_scale([](double r) { return 1.0 / r; }, 1.0, 1e8);
  CHECK(c.value == doctest::Approx(std::log(1e8)).epsilon(1e-12));
}

TEST_CASE("settings are validated") {
  QuadratureSettings q;
  q.abs_tol = -1.0;
  CHECK_THROWS(q.validate());
  QuadratureSettings ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("grids") {
  const auto g = geometric_grid(1.0, 1000.0, 4);
  REQUIRE(g.size() == 4);
  CHECK(g[1] == doctest::Approx(10.0));
  CHECK(g[3] == 1000.0);
  const auto l = linear_grid(0.0, 1.0, 5);
  CHECK(l[2] == doctest::Approx(0.5));
}

TEST_CASE("bisection finds the switch point") {
  const double s = bisect_first_true([](double x) { return x * x >= 2.0; }, 0.0, 2.0);
  CHECK(s == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("partial-sum classifier") {
  std::vector<double> geometric, harmonic;
  double a = 0.0, b = 0.0;
  for (int k = 0; k < 30; ++k) {
    a += std::pow(0.5, k);
    b += 1.0;  // every doubling shell adds the same amount, like int dr/r
    geometric.push_back(a);
    harmonic.push_back(b);
  }
  const auto g = classify_partial_sums(geometric);
  CHECK(g.verdict == SeriesVerdict::Convergent);
  CHECK(g.limit == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(classify_partial_sums(harmonic).verdict == SeriesVerdict::Divergent);
}
