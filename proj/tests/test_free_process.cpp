#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hkest/error.hpp"
#include "hkest/free_process.hpp"
#include "hkest/quadrature.hpp"

using namespace hkest;
using std::numbers::pi;

namespace {
const JumpProfile cauchy_f = JumpProfile::poly(1, 1.0, 0.0);
}

TEST_CASE("symbol of the 1/z^2 density") {
  const LevySymbol sym(cauchy_f, 1.0);
  CHECK(sym.psi(1.0) == doctest::Approx(pi).epsilon(1e-9));
  CHECK(sym.psi(0.0) == 0.0);
  CHECK(LevySymbol::default_sigma0(cauchy_f) == doctest::Approx(1.0 / pi).epsilon(1e-15));
  const LevySymbol c(cauchy_f, 1.0 / pi);
  for (double xi : {0.3, 1.0, 2.0, 17.0}) CHECK(c.psi(xi) == doctest::Approx(xi).epsilon(1e-9));
}

TEST_CASE("symbol scaling for pure powers") {
  for (double alpha : {0.5, 1.2, 1.7}) {
    const auto f = JumpProfile::poly(1, alpha, 0.0);
    const LevySymbol sym(f, 1.0);
    CHECK(sym.psi(2.0) / sym.psi(1.0) == doctest::Approx(std::pow(2.0, alpha)).epsilon(1e-6));
  }
}

TEST_CASE("symbol of a tempered density against frozen values") {
  // 0.1 xi^2 + 1.4 int_0^inf (1 - cos xi z) e^{-z} z^{-3/2} dz, 30-digit quadrature
  const auto f = JumpProfile::exponential(1, 1.0, 1.5);
  const LevySymbol sym(f, 0.7, 0.1);
  CHECK(sym.psi(0.5) == doctest::Approx(0.169347645817880717).epsilon(1e-8));
  CHECK(sym.psi(3.0) == doctest::Approx(3.09664241348512718).epsilon(1e-8));
}

TEST_CASE("Cauchy density by Fourier inversion") {
  const LevySymbol sym(cauchy_f, LevySymbol::default_sigma0(cauchy_f));
  DensityGridSpec spec;
  spec.dx = 0.01;
  spec.n = 1 << 20;
  for (double t : {1.0, 2.0}) {
    const auto p = density_fft(sym, t, spec);
    double worst = 0.0;
    for (double x = -20.0; x <= 20.0; x += 0.25) worst = std::max(worst, std::abs(p.at(x) - t / (pi * (t * t + x * x))));
    CHECK(worst < 1e-6);
    CHECK(std::abs(p.mass_defect) < 1e-6);
  }
  CHECK(density_fft(sym, 1.0, spec).at(0.0) == doctest::Approx(1.0 / pi).epsilon(1e-6));
}

TEST_CASE("Chapman-Kolmogorov on the grid") {
  const LevySymbol sym(cauchy_f, LevySymbol::default_sigma0(cauchy_f));
  DensityGridSpec spec;
  spec.dx = 0.02;
  spec.n = 1 << 16;
  const auto p1 = density_fft(sym, 1.0, spec);
  const auto p2 = density_fft(sym, 2.0, spec);
  CHECK(chapman_kolmogorov_defect(p1, p2, 20.0, 41) < 1e-5);
}

TEST_CASE("Nyquist guard and bounded symbols") {
  const LevySymbol sym(cauchy_f, LevySymbol::default_sigma0(cauchy_f));
  DensityGridSpec coarse;
  coarse.dx = 1.0;
  coarse.n = 1024;
  CHECK_THROWS_AS(density_fft(sym, 1.0, coarse), DomainError);
  const auto g = admissible_grid(sym, 1.0, 1024.0);
  CHECK(1.0 * sym.psi(pi / g.dx) >= 36.0 * (1.0 - 1e-9));
  // integrable core: compound Poisson, psi stays bounded
  const auto cp = JumpProfile::exponential(1, 1.0, 2.0, 0.0);
  const LevySymbol bounded(cp, 1.0);
  CHECK_THROWS_AS(admissible_grid(bounded, 1.0, 100.0), DomainError);
}

TEST_CASE("density upper bound holds for stable jumps and fails for a Gaussian profile") {
  const LevySymbol sym(cauchy_f, LevySymbol::default_sigma0(cauchy_f));
  DensityGridSpec spec;
  const auto fit = check_A2a(sym, cauchy_f, 1.0, spec);
  CHECK(fit.pass);
  CHECK(std::isfinite(fit.C4));
  // e^{-r^2} written as a tabulated profile
  std::vector<double> knots, vals;
  for (double r = 0.25; r <= 12.0; r += 0.25) {
    knots.push_back(r);
    vals.push_back(std::exp(-r * r));
  }
  const auto fake = JumpProfile::tabulated(1, knots, vals);
  CHECK_FALSE(check_A2a(sym, fake, 1.0, spec).pass);
}

TEST_CASE("density lower bound") {
  const LevySymbol sym(cauchy_f, LevySymbol::default_sigma0(cauchy_f));
  DensityGridSpec spec;
  spec.dx = 0.02;
  spec.n = 200000;
  const auto a = check_density_lower(sym, cauchy_f, 1.0, spec);
  CHECK(a.pass);
  CHECK(a.C > 0.0);
  // smaller t, smaller constant
  const auto b = check_density_lower(sym, cauchy_f, 0.5, spec);
  const auto c = check_density_lower(sym, cauchy_f, 0.25, spec);
  CHECK(b.C < a.C);
  CHECK(c.C < b.C);
}

TEST_CASE("density near the origin stays bounded for small t") {
  const LevySymbol sym(cauchy_f, LevySymbol::default_sigma0(cauchy_f));
  const double sup = check_A2b(sym, 1.0, 0.5, DensityGridSpec{});
  // p_t(x) <= t/(pi x^2) <= 1/(pi r^2)
  CHECK(sup > 0.0);
  CHECK(sup <= 1.0 / (pi * 0.25) + 1e-6);
}
