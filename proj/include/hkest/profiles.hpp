#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hkest {

// f(r) = r^{-d-alpha} (e v r)^{-gamma}
struct PolyJump {
  int d = 1;
  double alpha = 1.0;
  double gamma = 0.0;
};

// f(r) = e^{-kappa r} r^{-gamma} on [1, inf); the exponent on (0, 1) is
// core_gamma (defaults to gamma).
struct ExponentialJump {
  int d = 1;
  double kappa = 1.0;
  double gamma = 0.0;
  std::optional<double> core_gamma;
};

// log f linear in r between knots, constant below the first knot and a power
// law fitted through the last two knots above the last one.
struct TabulatedJump {
  int d = 1;
  std::vector<double> knots;
  std::vector<double> log_values;
};

class JumpProfile {
 public:
  using Family = std::variant<PolyJump, ExponentialJump, TabulatedJump>;

  static JumpProfile poly(int d, double alpha, double gamma);
  static JumpProfile exponential(int d, double kappa, double gamma,
                                 std::optional<double> core_gamma = std::nullopt);
  static JumpProfile tabulated(int d, std::vector<double> knots, std::vector<double> values);
  static JumpProfile tabulated_log(int d, std::vector<double> knots, std::vector<double> log_values);

  double value(double r) const;
  double log_value(double r) const;
  // d/dr log f(r); right derivative at kinks.
  double log_derivative(double r) const;
  // int_r^inf f(z) dz along a ray (one side of the real line).
  double tail_mass(double r) const;
  // int_0^r z^2 f(z) dz; +inf when not integrable at the origin.
  double second_moment(double r) const;
  // Radius where f crosses 1 (0 when f < 1 everywhere).
  double unit_crossing() const;

  int dimension() const;
  const Family& family() const { return family_; }
  // Tabulated tails are extrapolated, so anything depending on them far out is heuristic.
  bool heuristic_tail() const { return std::holds_alternative<TabulatedJump>(family_); }
  std::string describe() const;

 private:
  explicit JumpProfile(Family fam);
  Family family_;
  double tail_exponent_ = 0.0;  // tabulated only
};

double eval_f(const JumpProfile& p, double r);
double eval_f1(const JumpProfile& p, double r);
// -log f(r); requires f(r) < 1.
double abs_log_f(const JumpProfile& p, double r);

enum class RatioTrend { Increasing, Decreasing, Constant };

struct PowerOverScaleLink {
  double beta = 1.0;
  double scale = 1.0;
};

// log-log interpolation between knots, power-law extrapolation beyond the last.
struct TabulatedLink {
  std::vector<double> knots;
  std::vector<double> values;
};

class LinkFunction {
 public:
  using Family = std::variant<PowerOverScaleLink, TabulatedLink>;

  static LinkFunction power_over_scale(double beta, double scale, double domain_start);
  static LinkFunction tabulated(std::vector<double> knots, std::vector<double> values,
                                std::optional<double> domain_start = std::nullopt);

  double operator()(double s) const;
  double domain_start() const { return domain_start_; }
  RatioTrend ratio_trend() const { return trend_; }
  double factor() const { return factor_; }
  LinkFunction scaled(double c) const;
  const Family& family() const { return family_; }
  std::string describe() const;

 private:
  LinkFunction(Family fam, double domain_start);
  Family family_;
  double domain_start_;
  double factor_ = 1.0;
  RatioTrend trend_ = RatioTrend::Constant;
};

double eval_h(const LinkFunction& h, double s);

struct LogPowerPotential {
  double beta = 1.0;
};
struct PowerPotential {
  double beta = 1.0;
};
struct ComposedPotential {
  LinkFunction h;
  JumpProfile f;
};

class PotentialProfile {
 public:
  using Family = std::variant<LogPowerPotential, PowerPotential, ComposedPotential>;

  static PotentialProfile log_power(double beta, std::optional<double> R0 = std::nullopt);
  static PotentialProfile power(double beta, std::optional<double> R0 = std::nullopt);
  static PotentialProfile composed(const LinkFunction& h, const JumpProfile& f, double R0);

  double operator()(double r) const;
  double R0() const { return R0_; }
  double factor() const { return factor_; }
  PotentialProfile scaled(double c) const;
  const Family& family() const { return family_; }
  std::string describe() const;

 private:
  PotentialProfile(Family fam, double R0);
  Family family_;
  double R0_;
  double factor_ = 1.0;
};

double eval_g(const PotentialProfile& p, double r);

// Which closed forms apply to an (f, V) pair.
enum class ModelKind {
  StableLogPower,      // Poly f with V = (1 v log r)^beta
  RelativisticPower,   // Exponential f with V = (1 v r)^beta
  Generic
};

// The (f, V) pair together with the profile g and link h derived from it.
struct Model {
  JumpProfile f;
  PotentialProfile potential;
  PotentialProfile g;
  std::optional<LinkFunction> h;
  ModelKind kind = ModelKind::Generic;

  int dimension() const { return f.dimension(); }
};

Model make_model(const JumpProfile& f, const PotentialProfile& potential);

std::string to_string(ModelKind k);
std::string to_string(RatioTrend t);

}  // namespace hkest
