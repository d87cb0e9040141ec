#include "hkest/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "hkest/error.hpp"

namespace hkest {

void PathConfig::validate(double t) const {
  if (!(jump_cutoff > 0.0) || jump_cutoff > 1.0) throw PreconditionError("path config: jump cutoff must be in (0, 1]");
  if (!(time_step > 0.0) || time_step > 0.01 * t * (1.0 + 1e-12))
    throw PreconditionError("path config: time step must be in (0, t/100]");
  if (n_paths < 1) throw PreconditionError("path config: need at least one path");
}

JumpSizeSampler::JumpSizeSampler(const JumpProfile& f, double eps, int knots) : eps_(eps) {
  if (knots < 16) throw PreconditionError("jump sampler needs at least 16 knots");
  const double T0 = f.tail_mass(eps);
  if (!std::isfinite(T0) || !(T0 > 0.0)) throw PreconditionError("jump rate above the cutoff is not finite");
  // Push the last knot out until the remaining tail probability is negligible.
  double r_max = 2.0 * eps;
  while (f.tail_mass(r_max) / T0 > 1e-13 && r_max < 1e12) r_max *= 2.0;
  log_r_.resize(knots);
  log_tail_.resize(knots);
  const double la = std::log(eps), lb = std::log(r_max);
  for (int i = 0; i < knots; ++i) {
    log_r_[i] = la + (lb - la) * i / (knots - 1);
    log_tail_[i] = i == 0 ? 0.0 : std::log(f.tail_mass(std::exp(log_r_[i])) / T0);
  }
  const int n = knots - 1;
  tail_slope_ = (log_tail_[n] - log_tail_[n - 1]) / (log_r_[n] - log_r_[n - 1]);
  if (!(tail_slope_ < 0.0)) tail_slope_ = -1.0;
}

double JumpSizeSampler::radius(double u) const {
  const double lu = std::log(u);
  if (lu >= 0.0) return eps_;
  if (lu < log_tail_.back()) return std::exp(log_r_.back() + (lu - log_tail_.back()) / tail_slope_);
  // log_tail_ decreases: first knot at or below lu.
  const auto it = std::lower_bound(log_tail_.begin(), log_tail_.end(), lu, std::greater<double>());
  const std::size_t j = static_cast<std::size_t>(it - log_tail_.begin());
  if (j == 0) return eps_;
  const double a = log_tail_[j - 1], b = log_tail_[j];
  const double w = b == a ? 0.0 : (lu - a) / (b - a);
  return std::exp(log_r_[j - 1] + w * (log_r_[j] - log_r_[j - 1]));
}

namespace {

std::mt19937_64 path_generator(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x6b6e6c31u};
  return std::mt19937_64(seq);
}

struct PathModel {
  double sigma = 0.0;  // Brownian standard deviation per sqrt(time)
  double rate = 0.0;   // jumps per unit time
  const JumpSizeSampler* sampler = nullptr;
};

double path_weight(double x0, double t, const GridPotential& V, const PathModel& pm, double dt,
                   std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> wait(pm.rate > 0.0 ? pm.rate : 1.0);

  double x = x0, v = V(x0), s = 0.0, integral = 0.0;
  double next_jump = pm.rate > 0.0 ? wait(gen) : std::numeric_limits<double>::infinity();
  const long steps = std::lround(t / dt);
  for (long k = 1; k <= steps; ++k) {
    const double s_end = k == steps ? t : k * dt;
    // Continuous motion up to each jump inside the step, then the jump itself.
    while (next_jump < s_end) {
      const double h = next_jump - s;
      x += pm.sigma * std::sqrt(h) * normal(gen);
      const double v_pre = V(x);
      integral += 0.5 * h * (v + v_pre);
      const double r = pm.sampler->radius(1.0 - unif(gen));
      x += unif(gen) < 0.5 ? -r : r;
      v = V(x);
      s = next_jump;
      next_jump += wait(gen);
    }
    const double h = s_end - s;
    x += pm.sigma * std::sqrt(h) * normal(gen);
    const double v_end = V(x);
    integral += 0.5 * h * (v + v_end);
    v = v_end;
    s = s_end;
  }
  return std::exp(-integral);
}

}  // namespace

McEstimate simulate_ut1(double x0, double t, const GridPotential& V, const LevySymbol& sym, const PathConfig& cfg,
                        int threads) {
  if (!(t > 0.0)) throw DomainError("simulate_ut1 needs t > 0");
  cfg.validate(t);
  const double eps = cfg.jump_cutoff;
  const double rate = sym.tail_rate(eps);
  if (!std::isfinite(rate)) throw PreconditionError("jump rate above the cutoff is infinite; increase the cutoff");
  double var = 2.0 * sym.diffusion();
  if (cfg.small_jumps == SmallJumpPolicy::Diffusion) var += sym.small_jump_variance(eps);
  const JumpSizeSampler sampler(sym.profile(), eps);
  const PathModel pm{std::sqrt(var), rate, &sampler};

  std::vector<double> w(static_cast<std::size_t>(cfg.n_paths));
  const long n = cfg.n_paths;
  threads = std::clamp<long>(threads, 1, n);
  auto work = [&](long b, long e) {
    for (long p = b; p < e; ++p) {
      auto gen = path_generator(cfg.seed, static_cast<std::uint64_t>(p));
      w[static_cast<std::size_t>(p)] = path_weight(x0, t, V, pm, cfg.time_step, gen);
    }
  };
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (n + threads - 1) / threads;
    for (long b = 0; b < n; b += chunk) pool.emplace_back(work, b, std::min(n, b + chunk));
    for (auto& th : pool) th.join();
  }

  // Summed in path order so the thread count cannot change the rounding.
  double sum = 0.0;
  for (double v : w) sum += v;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : w) ss += (v - mean) * (v - mean);
  McEstimate est;
  est.mean = mean;
  est.std_error = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n)) : 0.0;
  est.n_paths = n;
  est.x0 = x0;
  est.t = t;
  est.config = cfg;
  est.brownian_variance = var;
  est.jump_rate = rate;
  return est;
}

std::vector<ConvergenceRow> convergence_study(double x0, double t, const GridPotential& V, const LevySymbol& sym,
                                              const PathConfig& base, int threads) {
  std::vector<PathConfig> cfgs(4, base);
  cfgs[1].jump_cutoff *= 0.5;
  cfgs[2].time_step *= 0.5;
  cfgs[3].n_paths *= 4;
  std::vector<ConvergenceRow> rows;
  for (const auto& c : cfgs) {
    rows.push_back({c.jump_cutoff, c.time_step, c.n_paths, simulate_ut1(x0, t, V, sym, c, threads)});
  }
  return rows;
}

}  // namespace hkest
