#pragma once

#include <optional>
#include <span>
#include <string>

#include "hkest/profiles.hpp"

namespace hkest {

enum class Regime { AIUC, NonAIUC };
enum class Basis { ClosedForm, NumericExtrapolation };

struct RegimeClass {
  Regime kind = Regime::NonAIUC;
  // Time scale of the ground-state domination when kind == AIUC; +inf otherwise.
  double tau0 = 0.0;
  Basis basis = Basis::ClosedForm;

  bool operator==(const RegimeClass&) const = default;
};

RegimeClass classify(const LinkFunction& h);

// Smallest r with |log f(r)| >= domain_start of h.
double start_radius(const JumpProfile& f, const LinkFunction& h);

// |log f(r)| / h(|log f(r)|).
double lambda_of_r(const JumpProfile& f, const LinkFunction& h, double r);

// inf{ r >= R0 : Lambda(r) > tau }, closed form when (f, h) is one of the
// recognized pairs, bisection otherwise. +inf in the AIUC regime.
double lambda_inv(const JumpProfile& f, const LinkFunction& h, double tau);

// Always the bisection path; the closed forms are tested against it.
double lambda_inv_numeric(const JumpProfile& f, const LinkFunction& h, double tau);

// Name of the closed form lambda_inv would use, if any.
std::optional<std::string> closed_form_tag(const JumpProfile& f, const LinkFunction& h);

// Solves kappa r + gamma log r = u for r >= 1.
double invert_exponential_exponent(double kappa, double gamma, double u);

class ThresholdData {
 public:
  ThresholdData(JumpProfile f, LinkFunction h);

  double lambda(double r) const { return lambda_of_r(f_, h_, r); }
  double lambda_inv(double tau) const { return hkest::lambda_inv(f_, h_, tau); }
  // Like lambda_inv, but tau below Lambda(R0) gives R0 (every r >= R0 qualifies).
  double window_radius(double tau) const;
  double R0() const { return R0_; }
  double lambda_at_R0() const { return lambda_R0_; }
  const RegimeClass& regime() const { return regime_; }
  const std::optional<std::string>& closed_form() const { return closed_; }
  const JumpProfile& f() const { return f_; }
  const LinkFunction& h() const { return h_; }

 private:
  JumpProfile f_;
  LinkFunction h_;
  double R0_;
  double lambda_R0_;
  RegimeClass regime_;
  std::optional<std::string> closed_;
};

// Counts of grid points violating the threshold laws at one tau:
//   -tau g(r) <= log f(r) on [R0, Lambda^{-1}(tau)),
//   -tau g(r) >= log f(r) on [Lambda^{-1}(tau), inf),
//   r -> |log f(r)| - tau g(r) non-decreasing on [Lambda^{-1}(tau), inf),
// with g = h(|log f|). Comparisons are done in log space, without tolerance.
struct ThresholdLawCheck {
  double tau = 0.0;
  double r_inv = 0.0;
  int points = 0;
  int below_violations = 0;
  int above_violations = 0;
  int monotone_violations = 0;
  bool pass() const { return below_violations == 0 && above_violations == 0 && monotone_violations == 0; }
};

ThresholdLawCheck check_threshold_laws(const ThresholdData& td, double tau, std::span<const double> grid);

std::string to_string(Regime r);
std::string to_string(Basis b);

}  // namespace hkest
