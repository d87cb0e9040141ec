#pragma once

#include <functional>
#include <span>

namespace hkest {

struct QuadratureSettings {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  // Upper bound on the number of subintervals the adaptive scheme may create.
  int max_refinement_depth = 4000;
  int dimension = 1;
  // Trapezoid points in the angle for d = 2 annulus integrals.
  int angular_points = 64;

  void validate() const;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  int intervals = 0;

  QuadResult& operator+=(const QuadResult& other);
};

using Integrand = std::function<double(double)>;

// Globally adaptive 21-point Gauss-Kronrod. The interval with the largest
// error estimate is bisected until the summed estimate meets
// max(abs_tol, rel_tol * |value|).
QuadResult integrate(const Integrand& fn, double a, double b, const QuadratureSettings& q = {});

// Same, with the initial partition given by sorted breakpoints (kinks of the
// integrand). Breakpoints outside [front, back] are not allowed.
QuadResult integrate(const Integrand& fn, std::span<const double> breakpoints,
                     const QuadratureSettings& q = {});

// Integral over [a, inf) through r = a / u (a > 0) or a split at 1.
QuadResult integrate_to_infinity(const Integrand& fn, double a, const QuadratureSettings& q = {});

// Integral over [a, b] (0 < a < b) in the variable s = log r. Suited to
// integrands spread over many decades.
QuadResult integrate_log_scale(const Integrand& fn, double a, double b,
                               const QuadratureSettings& q = {});

}  // namespace hkest
