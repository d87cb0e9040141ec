#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hkest/numeric.hpp"
#include "hkest/profiles.hpp"
#include "hkest/quadrature.hpp"

namespace hkest {

struct DjpSample {
  double radius = 0.0;
  double ratio = 0.0;  // J(x) / f(|x|)
  bool quadrature_ok = true;
};

struct DjpReport {
  double C3_hat = 0.0;
  double sup_location = 0.0;
  bool converged = false;
  std::vector<DjpSample> samples;
  SeriesTrend trend;
};

// Radii 1, 2, 4, ..., 2048.
std::vector<double> default_djp_radii();

// Ratio J(x)/f(|x|) with J(x) the convolution of f with itself restricted to
// |x - y| > 1, |y| > 1. Computed in log space so that far tails do not underflow.
double direct_jump_ratio(const JumpProfile& f, int d, double radius, const QuadratureSettings& q,
                         bool* ok = nullptr);

DjpReport check_direct_jump(const JumpProfile& f, int d, std::span<const double> radii,
                            const QuadratureSettings& q = {});

enum class DjpCriterion { Doubling, Tempered, LogConvex, Unknown };

struct IntCondReport {
  std::vector<double> shell_radii;  // outer radius of each partial integral
  std::vector<double> partials;
  SeriesTrend trend;
};

// Partial integrals of  int_{1<|y|<R} exp(-(f'/f)(|y|) y_1) f(|y|) dy  over
// doubling shells R = 2, 4, ..., 2^doublings.
IntCondReport int_cond_partials(const JumpProfile& f, int d, int doublings = 40);

DjpCriterion check_djp_sufficient(const JumpProfile& f, int d);

struct ConstantsPack {
  double R0 = 1.0;
  int n0 = 0;
  double t_b = 1.0;
  double C1 = 1.0, C2 = 1.0, C3 = 0.0;
  std::optional<double> C4, C5;
  double C6 = 1.0, C7 = 1.0;
  double K = 0.0, K1 = 0.0, K2 = 0.0, K3 = 0.0, K4 = 0.0;
  double lambda0_hat = 0.0;
  double theta = 0.0;
  bool n0_threshold_met = true;
  bool n0_user = false;
  bool C3_converged = false;
  bool heuristic = false;
  std::vector<std::string> notes;
};

// K = 4 C6 C7^2 and its multiples.
void derive_k_constants(ConstantsPack& pack);

struct ConstantsOptions {
  double t_b = 1.0;
  double sigma0 = 1.0;               // nu = sigma0 f
  double lambda0_hat = 0.0;
  std::optional<int> n0;              // explicit override
  std::optional<double> theta;        // threshold for the automatic n0
  bool compute_C3 = true;
  bool force_numeric = false;         // skip closed forms (used to cross-check them)
};

// Smallest integer n >= R0 + 2 with g(n - 2) >= theta, searched up to n_cap.
std::optional<int> select_n0(const PotentialProfile& g, double theta, int n_cap = 1000000);

ConstantsPack estimate_constants(const Model& model, const ConstantsOptions& opt = {});

// sup_{r >= 1} f(r)/f(r+1) and sup_{r >= R0} g(r+1)/g(r) by grid search.
double numeric_C2(const JumpProfile& f, bool* stable = nullptr);
double numeric_C7(const PotentialProfile& g, bool* stable = nullptr);
// max(sup V/g, sup g/V) by grid search.
double numeric_C6(const PotentialProfile& V, const PotentialProfile& g);
// inf_{r >= 0} V(r)/g(r) by grid search.
double numeric_inf_ratio(const PotentialProfile& V, const PotentialProfile& g);

struct GrowthReport {
  bool A1b = false;  // f non-increasing
  bool A1c = false;  // f(r) <= C2 f(r+1)
  bool A3b = false;  // g non-decreasing and unbounded on [R0, inf)
  bool A3c = false;  // g(r+1) <= C7 g(r)
  bool A4_monotone_ratio = false;
  std::vector<std::string> notes;
};

GrowthReport check_growth_conditions(const Model& model, int grid_points = 400);

std::string to_string(DjpCriterion c);

}  // namespace hkest
