#pragma once

#include <array>
#include <string>

#include "hkest/conditions.hpp"
#include "hkest/profiles.hpp"
#include "hkest/quadrature.hpp"
#include "hkest/thresholds.hpp"

namespace hkest {

// Spatial point; the second coordinate is ignored when d == 1.
using Point = std::array<double, 2>;

inline Point on_axis(double x) { return {x, 0.0}; }
double norm(const Point& p, int d);
double distance(const Point& a, const Point& b, int d);

// F(tau,x,y) = int_{n0+2 < |z| < |x| v |y|} f1(|x-z|) f1(|z-y|) e^{-tau g(|z|)} dz
QuadResult eval_F(double tau, const Point& x, const Point& y, const ConstantsPack& pack, const JumpProfile& f,
                  const PotentialProfile& g, const QuadratureSettings& q = {});

// G(tau,x) = int_{n0+2 < |z| <= |x|} f1(|x-z|) e^{-tau g(|z|)} dz
QuadResult eval_G(double tau, const Point& x, const ConstantsPack& pack, const JumpProfile& f,
                  const PotentialProfile& g, const QuadratureSettings& q = {});

// H(tau,x,y) = int_{n0+2 <= |z| <= |x| ^ |y|}
//   e^{-kappa(|x-z| + |z-y|)} / ((1 v |x-z|)^gamma (1 v |z-y|)^gamma) e^{-tau g(|z|)} dz
// for an Exponential profile.
QuadResult eval_H(double tau, const Point& x, const Point& y, const ConstantsPack& pack, const JumpProfile& f_exp,
                  const PotentialProfile& g, const QuadratureSettings& q = {});

enum class Region { BothInner, Mixed, BothOuter, PiucWindow, OuterTail };

// Two-sided bound at one (t, x, y), valid up to an unknown multiplicative constant.
struct Envelope {
  double t = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  Region region = Region::BothInner;
  std::string result_id;
  bool modulo_constant = true;
  bool quadrature_ok = true;
  ConstantsPack constants_used;
};

// 1 ^ f(r)/g(r); equals 1 in the core where f >= g.
double ground_state_shape(const Model& m, double r);

struct EnvelopeOptions {
  // Use e^{-lambda0 t}(1 ^ f/g)(1 ^ f/g) whenever |x| ^ |y| <= n0+3 (legitimate when inf V > 0).
  bool combined_inner = false;
};

// Result ids of the general two-sided forms:
//   kernel.inner / kernel.mixed / kernel.outer / kernel.combined
Envelope envelope_heat_kernel(double t, const Point& x, const Point& y, const ConstantsPack& pack, const Model& m,
                              const QuadratureSettings& q = {}, const EnvelopeOptions& opt = {});

// semigroup.inner / semigroup.outer
Envelope envelope_ut1(double t, const Point& x, const ConstantsPack& pack, const Model& m,
                      const QuadratureSettings& q = {});

// Closed-form shapes for the recognized regimes. Result ids:
//   ground-state        aIUC, every x, y
//   piuc-window         non-aIUC, |x| ^ |y| < Lambda^{-1}(t/K2)
//   doubling-tail       non-aIUC, doubling f, |x|,|y| >= Lambda^{-1}(t/K2)
//   exponential-tail    non-aIUC, d = 1 exponential f with gamma > 1, tails
//   exponential-tail-h  non-aIUC, d = 1 exponential f with gamma <= 1, tails (keeps H)
// Throws OutsideCoverageError when no closed form applies.
Envelope simplified_bounds(const RegimeClass& regime, double t, const Point& x, const Point& y,
                           const ConstantsPack& pack, const Model& m, const QuadratureSettings& q = {});

// U_t 1 counterparts: ground-state-mass, mass-window, mass-tail.
Envelope simplified_ut1(const RegimeClass& regime, double t, const Point& x, const ConstantsPack& pack,
                        const Model& m);

// Earliest time covered by the non-aIUC closed forms: max(30 t_b, K2 Lambda(n0+4)).
double nonaiuc_time_threshold(const ConstantsPack& pack, const Model& m);
// Earliest time covered by the aIUC closed form: 30 t_b + K2 tau0.
double aiuc_time_threshold(const ConstantsPack& pack, const RegimeClass& regime);

std::string to_string(Region r);

}  // namespace hkest
