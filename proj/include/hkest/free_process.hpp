#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hkest/profiles.hpp"

namespace hkest {

// Symmetric 1D Levy symbol psi(xi) = a xi^2 + int (1 - cos(xi z)) nu(z) dz with nu = sigma0 f(|z|).
class LevySymbol {
 public:
  LevySymbol(JumpProfile f, double sigma0, double diffusion = 0.0);

  // Makes psi(xi) = |xi|^alpha for the pure-power Poly family in d = 1; 1 otherwise.
  static double default_sigma0(const JumpProfile& f);

  double sigma0() const { return sigma0_; }
  double diffusion() const { return diffusion_; }
  const JumpProfile& profile() const { return f_; }

  double jump_density(double z) const;
  // int_{|z| >= eps} nu(z) dz
  double tail_rate(double eps) const;
  // int_{|z| < eps} z^2 nu(z) dz
  double small_jump_variance(double eps) const;

  double psi(double xi) const;
  // psi(xi) = psi(1) |xi|^alpha exactly (Poly with gamma = 0 and no diffusion).
  bool pure_power() const { return pure_power_; }
  double power_index() const { return power_index_; }

 private:
  double psi_quadrature(double k) const;

  JumpProfile f_;
  double sigma0_;
  double diffusion_;
  bool pure_power_ = false;
  double power_index_ = 0.0;
  double psi_one_ = 0.0;
};

double psi(const LevySymbol& sym, double xi);

// n points per period, spacing dx; n must be even.
struct DensityGridSpec {
  double dx = 0.05;
  std::size_t n = 80000;

  double period() const { return dx * static_cast<double>(n); }
};

// Smallest Nyquist-admissible spacing for time t (t psi(pi/dx) >= 36), keeping the period.
DensityGridSpec admissible_grid(const LevySymbol& sym, double t, double period);

struct DensityGrid {
  double t = 0.0;
  double dx = 0.0;
  std::vector<double> xs;      // -n/2 dx, ..., n/2 dx
  std::vector<double> values;  // p_t(xs[i])
  double mass_defect = 0.0;

  // Value at the grid point nearest to x (x inside the grid).
  double at(double x) const;
  std::size_t index_of(double x) const;
};

// Fourier inversion of e^{-t psi} on the symmetric frequency grid matched to spec.
DensityGrid density_fft(const LevySymbol& sym, double t, const DensityGridSpec& spec);

// max_x |(p_t * p_t)(x) - p_{2t}(x)| over sample points |x| <= x_max, by direct summation.
double chapman_kolmogorov_defect(const DensityGrid& pt, const DensityGrid& p2t, double x_max, std::size_t samples);

struct A2aFit {
  double C4 = 0.0;
  double C5 = 0.0;
  bool pass = false;
  std::vector<double> times;
  std::vector<double> tail_constants;  // sup p_t / f over the tail, per t
  double C4_half_range = 0.0;          // same fit restricted to half the x-range
};

// Least C4 (with C5 from a log-linear fit of the tail constants over t in
// {t_b, 2t_b, 3t_b, 4t_b}) such that p_t(x) <= C4 (e^{C5 t} f(|x|) ^ 1).
A2aFit check_A2a(const LevySymbol& sym, const JumpProfile& f, double t_b, const DensityGridSpec& spec);

struct LowerFit {
  double C = 0.0;
  double location = 0.0;
  double C_half_range = 0.0;
  bool pass = false;
};

// Largest C with p_t(x) >= C nu(x) on grid points 1 <= |x| <= period/8.
LowerFit check_density_lower(const LevySymbol& sym, const JumpProfile& f, double t, const DensityGridSpec& spec);

// sup over admissible t in (0, t_b] (halving from t_b) and r <= |x| <= 2 of p_t(x).
double check_A2b(const LevySymbol& sym, double t_b, double r, const DensityGridSpec& spec, int halvings = 3);

}  // namespace hkest
