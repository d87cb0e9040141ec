#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hkest/free_process.hpp"
#include "hkest/oracle.hpp"

namespace hkest {

struct PathConfig {
  double jump_cutoff = 0.02;  // epsilon: jumps below it become Brownian motion
  double time_step = 0.005;   // delta
  long n_paths = 100000;
  std::uint64_t seed = 1;
  SmallJumpPolicy small_jumps = SmallJumpPolicy::Diffusion;

  // epsilon in (0, 1], delta <= t/100, n_paths >= 1.
  void validate(double t) const;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_paths = 0;
  double x0 = 0.0;
  double t = 0.0;
  PathConfig config;
  double brownian_variance = 0.0;  // per unit time
  double jump_rate = 0.0;
};

// Inverse CDF of |Z| for jumps with density proportional to f on [eps, inf).
class JumpSizeSampler {
 public:
  JumpSizeSampler(const JumpProfile& f, double eps, int knots = 10000);
  // u in (0, 1): radius r with P(|Z| > r) = u.
  double radius(double u) const;
  double cutoff() const { return eps_; }

 private:
  double eps_;
  std::vector<double> log_r_;
  std::vector<double> log_tail_;  // log(T(r)/T(eps)), decreasing
  double tail_slope_ = -1.0;      // d log T / d log r beyond the last knot
};

// E^{x0}[exp(-int_0^t V(X_s) ds)] by path simulation: Brownian motion with the
// variance of the small jumps plus compound Poisson jumps above the cutoff,
// potential integrated by the trapezoid rule on the time grid and jump times.
// Each path draws from its own generator keyed by (seed, path index), so the
// result does not depend on the thread count.
McEstimate simulate_ut1(double x0, double t, const GridPotential& V, const LevySymbol& sym, const PathConfig& cfg,
                        int threads = 1);

struct ConvergenceRow {
  double jump_cutoff = 0.0;
  double time_step = 0.0;
  long n_paths = 0;
  McEstimate estimate;
};

// The base configuration, then epsilon halved, delta halved and the path count
// quadrupled, one change at a time.
std::vector<ConvergenceRow> convergence_study(double x0, double t, const GridPotential& V, const LevySymbol& sym,
                                              const PathConfig& base, int threads = 1);

}  // namespace hkest
