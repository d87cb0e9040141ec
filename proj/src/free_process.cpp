#include "hkest/free_process.hpp"

#include <limits>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "hkest/error.hpp"
#include "hkest/quadrature.hpp"

namespace hkest {

namespace {

constexpr double kPi = std::numbers::pi;

// Alternating-chunk sums need an accelerated limit; repeated averaging of the
// partial sums (binomial weights) does this for smooth sign-alternating terms.
double averaged_limit(std::vector<double> partial) {
  while (partial.size() > 1) {
    for (std::size_t i = 0; i + 1 < partial.size(); ++i) partial[i] = 0.5 * (partial[i] + partial[i + 1]);
    partial.pop_back();
  }
  return partial.front();
}

// Cubic interpolation of log psi against log xi on a uniform log grid.
class PsiTable {
 public:
  PsiTable(const LevySymbol& sym, double xi_min, double xi_max) {
    const int per_decade = 64;
    const double lmin = std::log(xi_min) - 0.1, lmax = std::log(xi_max) + 0.1;
    const int n = std::max(8, static_cast<int>(std::ceil((lmax - lmin) / std::log(10.0) * per_decade)));
    lo_ = lmin;
    h_ = (lmax - lmin) / n;
    logs_.resize(n + 1);
    for (int i = 0; i <= n; ++i) logs_[i] = std::log(sym.psi(std::exp(lo_ + i * h_)));
  }

  double operator()(double xi) const {
    const double u = (std::log(xi) - lo_) / h_;
    const int n = static_cast<int>(logs_.size()) - 1;
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 1, n - 2);
    const double s = u - i;
    const double p0 = logs_[i - 1], p1 = logs_[i], p2 = logs_[i + 1], p3 = logs_[i + 2];
    // Catmull-Rom through the four neighbours.
    const double v = p1 + 0.5 * s * (p2 - p0 + s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + s * (3.0 * (p1 - p2) + p3 - p0)));
    return std::exp(v);
  }

 private:
  double lo_ = 0.0, h_ = 1.0;
  std::vector<double> logs_;
};

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

LevySymbol::LevySymbol(JumpProfile f, double sigma0, double diffusion)
    : f_(std::move(f)), sigma0_(sigma0), diffusion_(diffusion) {
  if (f_.dimension() != 1) throw PreconditionError("Levy symbols are built for d = 1 profiles");
  if (!(sigma0_ > 0.0)) throw PreconditionError("sigma0 must be > 0");
  if (!(diffusion_ >= 0.0)) throw PreconditionError("diffusion must be >= 0");
  const double m2 = f_.second_moment(1.0);
  const double tail = f_.tail_mass(1.0);
  if (!std::isfinite(m2) || !std::isfinite(tail))
    throw PreconditionError("jump density is not integrable against 1 ^ |z|^2");
  if (const auto* p = std::get_if<PolyJump>(&f_.family())) {
    if (p->gamma == 0.0 && diffusion_ == 0.0) {
      pure_power_ = true;
      power_index_ = p->alpha;
      psi_one_ = psi_quadrature(1.0);
    }
  }
}

double LevySymbol::default_sigma0(const JumpProfile& f) {
  const auto* p = std::get_if<PolyJump>(&f.family());
  if (!p || p->d != 1) return 1.0;
  const double a = p->alpha;
  if (std::abs(a - 1.0) < 1e-12) return 1.0 / kPi;
  return a / (2.0 * std::tgamma(1.0 - a) * std::cos(kPi * a / 2.0));
}

double LevySymbol::jump_density(double z) const { return sigma0_ * f_.value(std::abs(z)); }

double LevySymbol::tail_rate(double eps) const { return 2.0 * sigma0_ * f_.tail_mass(eps); }

double LevySymbol::small_jump_variance(double eps) const { return 2.0 * sigma0_ * f_.second_moment(eps); }

double LevySymbol::psi_quadrature(double k) const {
  const double zs = 1e-4 / k;
  const double zc = 1.0 / k;
  QuadratureSettings q;
  q.abs_tol = 1e-300;
  q.rel_tol = 1e-12;
  // (1 - cos u) ~ u^2/2 below zs; the relative error of that is below 1e-9.
  const double small = 0.5 * k * k * f_.second_moment(zs);
  auto one_minus_cos = [&](double z) {
    const double s = std::sin(0.5 * k * z);
    return 2.0 * s * s * f_.value(z);
  };
  const double mid = integrate_log_scale(one_minus_cos, zs, zc, q).value;
  // int_{zc}^inf (1 - cos) f = tail mass - oscillatory part, the latter summed chunk by chunk
  // between consecutive zeros of cos(kz).
  auto cosf = [&](double z) { return std::cos(k * z) * f_.value(z); };
  std::vector<double> partial;
  double a = zc;
  double b = 0.5 * kPi / k;
  double sum = integrate(cosf, a, b, q).value;
  partial.push_back(sum);
  const int chunks = 96;
  for (int m = 1; m <= chunks; ++m) {
    a = b;
    b = (m + 0.5) * kPi / k;
    sum += integrate(cosf, a, b, q).value;
    partial.push_back(sum);
  }
  const std::vector<double> last(partial.end() - 48, partial.end());
  const double osc = averaged_limit(last);
  const double jump = small + mid + f_.tail_mass(zc) - osc;
  return diffusion_ * k * k + 2.0 * sigma0_ * jump;
}

double LevySymbol::psi(double xi) const {
  const double k = std::abs(xi);
  if (k == 0.0) return 0.0;
  if (pure_power_) return psi_one_ * std::pow(k, power_index_);
  return psi_quadrature(k);
}

double psi(const LevySymbol& sym, double xi) { return sym.psi(xi); }

DensityGridSpec admissible_grid(const LevySymbol& sym, double t, double period) {
  if (!(t > 0.0) || !(period > 0.0)) throw PreconditionError("admissible_grid needs t > 0 and period > 0");
  // psi is increasing in |xi| for these symbols; find the frequency where t psi = 36.
  double k = 1.0;
  while (t * sym.psi(k) < 36.0) {
    k *= 2.0;
    if (k > 1e12) throw DomainError("symbol stays below 36/t; no admissible density grid (bounded exponent)");
  }
  double lo = k / 2.0, hi = k;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (t * sym.psi(mid) >= 36.0)
      hi = mid;
    else
      lo = mid;
  }
  DensityGridSpec spec;
  spec.n = static_cast<std::size_t>(std::ceil(period * hi / kPi / 2.0)) * 2;
  spec.dx = period / static_cast<double>(spec.n);
  return spec;
}

double DensityGrid::at(double x) const { return values[index_of(x)]; }

std::size_t DensityGrid::index_of(double x) const {
  const double u = (x - xs.front()) / dx;
  const long i = std::lround(u);
  if (i < 0 || i >= static_cast<long>(xs.size())) throw DomainError("point outside the density grid");
  return static_cast<std::size_t>(i);
}

DensityGrid density_fft(const LevySymbol& sym, double t, const DensityGridSpec& spec) {
  if (!(t > 0.0)) throw DomainError("density needs t > 0");
  if (spec.n < 16 || spec.n % 2 != 0 || !(spec.dx > 0.0)) throw PreconditionError("density grid needs even n >= 16");
  const double nyquist = kPi / spec.dx;
  if (t * sym.psi(nyquist) < 36.0) {
    const DensityGridSpec need = admissible_grid(sym, t, spec.period());
    throw DomainError("Nyquist condition t psi(pi/dx) >= 36 violated: need dx <= " + num(need.dx) + " (n >= " +
                      std::to_string(need.n) + " for period " + num(spec.period()) + ")");
  }
  const std::size_t half = spec.n / 2;
  const double L = spec.period();
  std::vector<double> in(half + 1), out(half + 1);
  std::optional<PsiTable> table;
  if (!sym.pure_power()) table.emplace(sym, 2.0 * kPi / L, nyquist);
  in[0] = 1.0;
  for (std::size_t m = 1; m <= half; ++m) {
    const double xi = 2.0 * kPi * static_cast<double>(m) / L;
    in[m] = std::exp(-t * (table ? (*table)(xi) : sym.psi(xi)));
  }
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan plan = fftw_plan_r2r_1d(static_cast<int>(half + 1), in.data(), out.data(), FFTW_REDFT00, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  DensityGrid g;
  g.t = t;
  g.dx = spec.dx;
  g.xs.resize(2 * half + 1);
  g.values.resize(2 * half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    const double v = out[k] / L;
    g.xs[half + k] = static_cast<double>(k) * spec.dx;
    g.xs[half - k] = -static_cast<double>(k) * spec.dx;
    g.values[half + k] = v;
    g.values[half - k] = v;
  }
  // One period: drop the duplicated endpoint.
  double mass = 0.0;
  for (std::size_t i = 1; i < g.values.size(); ++i) mass += g.values[i];
  g.mass_defect = std::abs(1.0 - mass * spec.dx);
  return g;
}

double chapman_kolmogorov_defect(const DensityGrid& pt, const DensityGrid& p2t, double x_max, std::size_t samples) {
  const std::size_t n = pt.values.size() - 1;  // period length in points
  const std::size_t half = n / 2;
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double x = -x_max + 2.0 * x_max * static_cast<double>(s) / static_cast<double>(samples - 1);
    const long ix = std::lround(x / pt.dx);
    double conv = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const long jy = static_cast<long>(j) - static_cast<long>(half);
      long k = ix - jy;
      // Periodic wrap into [-half, half).
      k = ((k + static_cast<long>(half)) % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n) -
          static_cast<long>(half);
      conv += pt.values[static_cast<std::size_t>(k + static_cast<long>(half))] * pt.values[j];
    }
    conv *= pt.dx;
    const double target = p2t.values[static_cast<std::size_t>(ix + static_cast<long>(half))];
    worst = std::max(worst, std::abs(conv - target));
  }
  return worst;
}

namespace {

// Largest |x| at which the density still clears the noise floor; negative
// values show how large the inversion error is.
double resolvable_radius(const DensityGrid& p) {
  double noise = 0.0;
  for (double v : p.values) noise = std::max(noise, -v);
  const double floor = std::max(100.0 * noise, 1e-12 * *std::max_element(p.values.begin(), p.values.end()));
  double r = 0.0;
  for (std::size_t i = 0; i < p.xs.size(); ++i)
    if (p.values[i] >= floor) r = std::max(r, std::abs(p.xs[i]));
  return r;
}

struct A2aCore {
  double C4 = 0.0, C5 = 0.0;
  std::vector<double> tail;
};

A2aCore fit_A2a(const std::vector<DensityGrid>& dens, const std::vector<double>& times, const JumpProfile& f,
                double x_max) {
  A2aCore core;
  std::vector<double> peak(dens.size());
  for (std::size_t k = 0; k < dens.size(); ++k) {
    double tail = 0.0, top = 0.0;
    for (std::size_t i = 0; i < dens[k].xs.size(); ++i) {
      const double x = std::abs(dens[k].xs[i]);
      if (x > x_max) continue;
      top = std::max(top, dens[k].values[i]);
      if (x <= 0.0) continue;
      const double fx = f.value(x);
      if (fx < 1.0) tail = std::max(tail, dens[k].values[i] / fx);
    }
    core.tail.push_back(tail);
    peak[k] = top;
  }
  // log tail(t) = a + C5 t by least squares; C5 >= 0.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double y = std::log(core.tail[k]);
    sx += times[k];
    sy += y;
    sxx += times[k] * times[k];
    sxy += times[k] * y;
  }
  const double denom = n * sxx - sx * sx;
  core.C5 = denom > 0.0 ? std::max(0.0, (n * sxy - sx * sy) / denom) : 0.0;
  if (!std::isfinite(core.C5)) core.C5 = std::numeric_limits<double>::infinity();
  // Least C4 given C5, directly from the grid.
  for (std::size_t k = 0; k < dens.size(); ++k) {
    const double growth = std::exp(core.C5 * times[k]);
    for (std::size_t i = 0; i < dens[k].xs.size(); ++i) {
      const double x = std::abs(dens[k].xs[i]);
      if (x > x_max) continue;
      const double bound = x > 0.0 ? std::min(growth * f.value(x), 1.0) : 1.0;
      core.C4 = std::max(core.C4, dens[k].values[i] / bound);
    }
  }
  return core;
}

}  // namespace

A2aFit check_A2a(const LevySymbol& sym, const JumpProfile& f, double t_b, const DensityGridSpec& spec) {
  if (!(t_b > 0.0)) throw PreconditionError("t_b must be > 0");
  A2aFit fit;
  std::vector<DensityGrid> dens;
  for (int k = 1; k <= 4; ++k) {
    fit.times.push_back(k * t_b);
    dens.push_back(density_fft(sym, k * t_b, spec));
  }
  // Stay well inside the period so aliasing from neighbouring copies stays small.
  double x_max = spec.period() / 8.0;
  for (const auto& p : dens) x_max = std::min(x_max, resolvable_radius(p));
  const A2aCore full = fit_A2a(dens, fit.times, f, x_max);
  const A2aCore half = fit_A2a(dens, fit.times, f, x_max / 2.0);
  fit.C4 = full.C4;
  fit.C5 = full.C5;
  fit.tail_constants = full.tail;
  fit.C4_half_range = half.C4;
  // A bound that keeps growing when the range doubles is not a bound.
  fit.pass = std::isfinite(fit.C4) && std::isfinite(fit.C5) && fit.C4 <= 2.0 * half.C4;
  return fit;
}

LowerFit check_density_lower(const LevySymbol& sym, const JumpProfile& f, double t, const DensityGridSpec& spec) {
  const DensityGrid p = density_fft(sym, t, spec);
  const double x_max = std::min(spec.period() / 8.0, resolvable_radius(p));
  if (x_max < 2.0) throw DomainError("density falls below the rounding floor before |x| = 2");
  LowerFit fit;
  fit.C = std::numeric_limits<double>::infinity();
  fit.C_half_range = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.xs.size(); ++i) {
    const double x = std::abs(p.xs[i]);
    if (x < 1.0 || x > x_max) continue;
    const double ratio = p.values[i] / (sym.sigma0() * f.value(x));
    if (ratio < fit.C) {
      fit.C = ratio;
      fit.location = p.xs[i];
    }
    if (x <= x_max / 2.0) fit.C_half_range = std::min(fit.C_half_range, ratio);
  }
  fit.pass = fit.C > 0.0 && std::isfinite(fit.C) && fit.C >= 0.5 * fit.C_half_range;
  return fit;
}

double check_A2b(const LevySymbol& sym, double t_b, double r, const DensityGridSpec& spec, int halvings) {
  double sup = 0.0;
  double t = t_b;
  for (int k = 0; k <= halvings; ++k, t *= 0.5) {
    if (t * sym.psi(kPi / spec.dx) < 36.0) break;  // below the admissible range
    const DensityGrid p = density_fft(sym, t, spec);
    for (std::size_t i = 0; i < p.xs.size(); ++i) {
      const double x = std::abs(p.xs[i]);
      if (x >= r && x <= 2.0) sup = std::max(sup, p.values[i]);
    }
  }
  return sup;
}

}  // namespace hkest
