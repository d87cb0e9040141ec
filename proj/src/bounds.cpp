#include "hkest/bounds.hpp"

#include <limits>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "hkest/error.hpp"
#include "hkest/numeric.hpp"

namespace hkest {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kE = std::numbers::e;

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// log f1(r), with f1 = f ^ 1 and r1 the radius where f crosses 1.
double log_f1(const JumpProfile& f, double r1, double r) {
  if (r <= r1 || r <= 0.0) return 0.0;
  return std::min(0.0, f.log_value(r));
}

// Integral of exp(log_fn) over [pts.front(), pts.back()], scaled by the sampled
// peak so that tolerances act relative to the integrand's own magnitude.
QuadResult integrate_exp(const std::function<double(double)>& log_fn, std::vector<double> pts,
                         const QuadratureSettings& q) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  QuadResult out;
  if (pts.size() < 2) return out;
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (int k = 0; k <= 32; ++k) {
      const double z = pts[i] + (pts[i + 1] - pts[i]) * k / 32.0;
      const double v = log_fn(z);
      if (std::isfinite(v)) peak = std::max(peak, v);
    }
  }
  if (!std::isfinite(peak)) return out;
  out = integrate([&](double z) { return std::exp(log_fn(z) - peak); }, pts, q);
  const double scale = std::exp(peak);
  out.value *= scale;
  out.error *= scale;
  return out;
}

std::vector<double> clip_points(double lo, double hi, std::initializer_list<double> extra) {
  std::vector<double> pts{lo, hi};
  for (double p : extra)
    if (p > lo && p < hi) pts.push_back(p);
  return pts;
}

// Integral over the annulus lo < |z| < hi of a radial-angular integrand given in log form.
// d == 1: the two segments (lo, hi) and (-hi, -lo); d == 2: polar with an angular trapezoid.
template <class LogIntegrand>
QuadResult annulus(int d, double lo, double hi, const LogIntegrand& log_at, std::initializer_list<double> kinks_1d,
                   std::initializer_list<double> kinks_radial, const QuadratureSettings& q) {
  QuadResult total;
  if (!(hi > lo)) return total;
  if (d == 1) {
    std::vector<double> pos{lo, hi}, neg{-hi, -lo};
    for (double k : kinks_1d) {
      if (k > lo && k < hi) pos.push_back(k);
      if (k > -hi && k < -lo) neg.push_back(k);
    }
    auto fn = [&](double z) { return log_at(Point{z, 0.0}); };
    total += integrate_exp(fn, pos, q);
    total += integrate_exp(fn, neg, q);
    return total;
  }
  const int n = q.angular_points;
  auto radial = [&](double rho) {
    // log of rho * sum_j exp(log_at(z_j)) * 2 pi / n, accumulated stably.
    std::vector<double> logs(n);
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double th = 2.0 * kPi * j / n;
      logs[j] = log_at(Point{rho * std::cos(th), rho * std::sin(th)});
      m = std::max(m, logs[j]);
    }
    if (!std::isfinite(m)) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double l : logs) s += std::exp(l - m);
    return m + std::log(s * 2.0 * kPi / n * rho);
  };
  std::vector<double> pts = clip_points(lo, hi, kinks_radial);
  return integrate_exp(radial, pts, q);
}

void require_outer(double r, double bound, const char* what) {
  if (!(r > bound)) throw PreconditionError(std::string(what) + " requires |x| > " + num(bound));
}

QuadratureSettings with_dimension(QuadratureSettings q, int d) {
  q.dimension = d;
  q.validate();
  return q;
}


}  // namespace

double norm(const Point& p, int d) { return d == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]); }

double distance(const Point& a, const Point& b, int d) {
  return d == 1 ? std::abs(a[0] - b[0]) : std::hypot(a[0] - b[0], a[1] - b[1]);
}

QuadResult eval_F(double tau, const Point& x, const Point& y, const ConstantsPack& pack, const JumpProfile& f,
                  const PotentialProfile& g, const QuadratureSettings& q0) {
  const int d = f.dimension();
  const QuadratureSettings q = with_dimension(q0, d);
  if (!(tau > 0.0)) throw DomainError("F needs tau > 0");
  const double nx = norm(x, d), ny = norm(y, d);
  require_outer(nx, pack.n0 + 3.0, "F");
  require_outer(ny, pack.n0 + 3.0, "F");
  const double r1 = f.unit_crossing();
  auto log_at = [&](const Point& z) {
    return log_f1(f, r1, distance(x, z, d)) + log_f1(f, r1, distance(z, y, d)) - tau * g(norm(z, d));
  };
  return annulus(d, pack.n0 + 2.0, std::max(nx, ny), log_at, {x[0] - r1, x[0] + r1, y[0] - r1, y[0] + r1, x[0], y[0]},
                 {nx - r1, nx + r1, ny - r1, ny + r1}, q);
}

QuadResult eval_G(double tau, const Point& x, const ConstantsPack& pack, const JumpProfile& f,
                  const PotentialProfile& g, const QuadratureSettings& q0) {
  const int d = f.dimension();
  const QuadratureSettings q = with_dimension(q0, d);
  if (!(tau > 0.0)) throw DomainError("G needs tau > 0");
  const double nx = norm(x, d);
  require_outer(nx, pack.n0 + 3.0, "G");
  const double r1 = f.unit_crossing();
  auto log_at = [&](const Point& z) { return log_f1(f, r1, distance(x, z, d)) - tau * g(norm(z, d)); };
  return annulus(d, pack.n0 + 2.0, nx, log_at, {x[0] - r1, x[0] + r1, x[0]}, {nx - r1, nx + r1}, q);
}

QuadResult eval_H(double tau, const Point& x, const Point& y, const ConstantsPack& pack, const JumpProfile& f_exp,
                  const PotentialProfile& g, const QuadratureSettings& q0) {
  const auto* e = std::get_if<ExponentialJump>(&f_exp.family());
  if (!e) throw PreconditionError("H is defined for exponential profiles only");
  const int d = f_exp.dimension();
  const QuadratureSettings q = with_dimension(q0, d);
  if (!(tau > 0.0)) throw DomainError("H needs tau > 0");
  const double nx = norm(x, d), ny = norm(y, d);
  const double a = pack.n0 + 2.0;
  if (!(nx >= a) || !(ny >= a)) throw PreconditionError("H requires |x|, |y| >= " + num(a));
  const double kappa = e->kappa, gamma = e->gamma;
  auto log_at = [&](const Point& z) {
    const double dx = distance(x, z, d), dy = distance(z, y, d);
    return -kappa * (dx + dy) - gamma * std::log(std::max(1.0, dx)) - gamma * std::log(std::max(1.0, dy)) -
           tau * g(norm(z, d));
  };
  return annulus(d, a, std::min(nx, ny), log_at, {x[0] - 1.0, x[0] + 1.0, y[0] - 1.0, y[0] + 1.0, x[0], y[0]},
                 {nx - 1.0, nx, nx + 1.0, ny - 1.0, ny, ny + 1.0}, q);
}

double ground_state_shape(const Model& m, double r) {
  if (r <= 0.0) return 1.0;
  return std::min(1.0, std::exp(m.f.log_value(r) - std::log(m.g(r))));
}

Envelope envelope_heat_kernel(double t, const Point& x, const Point& y, const ConstantsPack& pack, const Model& m,
                              const QuadratureSettings& q, const EnvelopeOptions& opt) {
  if (!(t > 30.0 * pack.t_b))
    throw DomainError("heat kernel envelope needs t > 30*t_b = " + num(30.0 * pack.t_b) + ", got t = " + num(t));
  const int d = m.dimension();
  const double nx = norm(x, d), ny = norm(y, d);
  const double inner = pack.n0 + 3.0;
  const double e0 = std::exp(-pack.lambda0_hat * t);
  Envelope env;
  env.t = t;
  env.constants_used = pack;

  if (opt.combined_inner && std::min(nx, ny) <= inner) {
    const double v = e0 * ground_state_shape(m, nx) * ground_state_shape(m, ny);
    env.lower = env.upper = v;
    env.region = (nx <= inner && ny <= inner) ? Region::BothInner : Region::Mixed;
    env.result_id = "kernel.combined";
    return env;
  }
  if (nx <= inner && ny <= inner) {
    env.lower = env.upper = e0;
    env.region = Region::BothInner;
    env.result_id = "kernel.inner";
    return env;
  }
  if (nx <= inner || ny <= inner) {
    const double r = std::max(nx, ny);
    env.lower = env.upper = e0 * m.f.value(r) / m.g(r);
    env.region = Region::Mixed;
    env.result_id = "kernel.mixed";
    return env;
  }
  const QuadResult Fl = eval_F(pack.K * t, x, y, pack, m.f, m.g, q);
  const QuadResult Fu = eval_F(t / pack.K, x, y, pack, m.f, m.g, q);
  const double ff = e0 * m.f.value(nx) * m.f.value(ny);
  const double gg = m.g(nx) * m.g(ny);
  env.lower = std::max(Fl.value, ff) / gg;
  env.upper = std::max(Fu.value, ff) / gg;
  env.region = Region::BothOuter;
  env.result_id = "kernel.outer";
  env.quadrature_ok = Fl.converged && Fu.converged;
  return env;
}

Envelope envelope_ut1(double t, const Point& x, const ConstantsPack& pack, const Model& m,
                      const QuadratureSettings& q) {
  if (!(t > 30.0 * pack.t_b))
    throw DomainError("U_t 1 envelope needs t > 30*t_b = " + num(30.0 * pack.t_b) + ", got t = " + num(t));
  const int d = m.dimension();
  const double nx = norm(x, d);
  const double e0 = std::exp(-pack.lambda0_hat * t);
  Envelope env;
  env.t = t;
  env.constants_used = pack;
  if (nx <= pack.n0 + 3.0) {
    env.lower = env.upper = e0;
    env.region = Region::BothInner;
    env.result_id = "semigroup.inner";
    return env;
  }
  const QuadResult Gl = eval_G(pack.K * t, x, pack, m.f, m.g, q);
  const QuadResult Gu = eval_G(t / pack.K, x, pack, m.f, m.g, q);
  const double ef = e0 * m.f.value(nx);
  const double gx = m.g(nx);
  env.lower = std::max(Gl.value, ef) / gx;
  env.upper = std::max(Gu.value, ef) / gx;
  env.region = Region::BothOuter;
  env.result_id = "semigroup.outer";
  env.quadrature_ok = Gl.converged && Gu.converged;
  return env;
}

double nonaiuc_time_threshold(const ConstantsPack& pack, const Model& m) {
  if (!m.h) throw OutsideCoverageError("no link h is known for this potential");
  return std::max(30.0 * pack.t_b, pack.K2 * lambda_of_r(m.f, *m.h, pack.n0 + 4.0));
}

double aiuc_time_threshold(const ConstantsPack& pack, const RegimeClass& regime) {
  return 30.0 * pack.t_b + pack.K2 * regime.tau0;
}

namespace {

bool is_doubling(const JumpProfile& f) {
  if (std::holds_alternative<PolyJump>(f.family())) return true;
  if (std::holds_alternative<TabulatedJump>(f.family()))
    return check_djp_sufficient(f, f.dimension()) == DjpCriterion::Doubling;
  return false;
}

// r -> g(r)/log r monotone on [R0 v e, 1e6 (R0 v e)].
bool g_over_log_monotone(const Model& m) {
  const double a = std::max(m.g.R0(), kE) * (1.0 + 1e-9);
  const auto grid = geometric_grid(a, a * 1e6, 2000);
  int up = 0, down = 0;
  double prev = m.g(grid[0]) / std::log(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = m.g(grid[i]) / std::log(grid[i]);
    if (v > prev) ++up;
    if (v < prev) ++down;
    prev = v;
  }
  return up == 0 || down == 0;
}

}  // namespace

Envelope simplified_bounds(const RegimeClass& regime, double t, const Point& x, const Point& y,
                           const ConstantsPack& pack, const Model& m, const QuadratureSettings& q) {
  const int d = m.dimension();
  const double nx = norm(x, d), ny = norm(y, d);
  const double lam = pack.lambda0_hat;
  Envelope env;
  env.t = t;
  env.constants_used = pack;

  if (regime.kind == Regime::AIUC) {
    const double t0 = aiuc_time_threshold(pack, regime);
    if (!(t > t0))
      throw OutsideCoverageError("ground-state form needs t > 30 t_b + K2 tau0 = " + num(t0) +
                                 "; use envelope_heat_kernel");
    env.lower = env.upper = std::exp(-lam * t) * ground_state_shape(m, nx) * ground_state_shape(m, ny);
    env.region = Region::PiucWindow;
    env.result_id = "ground-state";
    return env;
  }

  if (!m.h) throw OutsideCoverageError("no link h is known for this potential; use envelope_heat_kernel");
  const double t0 = nonaiuc_time_threshold(pack, m);
  if (!(t > t0))
    throw OutsideCoverageError("non-aIUC closed forms need t > max(30 t_b, K2 Lambda(n0+4)) = " + num(t0) +
                               "; use envelope_heat_kernel");
  const ThresholdData td(m.f, *m.h);
  const double window = td.window_radius(t / pack.K2);
  const double mn = std::min(nx, ny);
  if (mn < window) {
    env.lower = env.upper = std::exp(-lam * t) * ground_state_shape(m, nx) * ground_state_shape(m, ny);
    env.region = Region::PiucWindow;
    env.result_id = "piuc-window";
    return env;
  }

  env.region = Region::OuterTail;
  const double gg = m.g(nx) * m.g(ny);
  const double dxy = distance(x, y, d);

  if (is_doubling(m.f)) {
    if (!(m.g(window) >= 4.0 * pack.K2 * std::abs(lam)))
      throw OutsideCoverageError("doubling tail form needs g(Lambda^{-1}(t/K2)) >= 4 K2 |lambda0|; use envelope_heat_kernel");
    const double f1 = eval_f1(m.f, std::max(dxy, 1e-300));
    const double gm = m.g(mn);
    env.lower = std::exp(-pack.K3 * t * gm) * f1 / gg;
    env.upper = std::exp(-(t / pack.K3) * gm) * f1 / gg;
    env.result_id = "doubling-tail";
    return env;
  }

  const auto* e = std::get_if<ExponentialJump>(&m.f.family());
  if (e && d == 1) {
    const double kappa = e->kappa, gamma = e->gamma;
    const double log_first = -lam * t - kappa * (nx + ny) - gamma * (std::log(nx) + std::log(ny));
    const double log_pair = -kappa * dxy - gamma * std::log1p(dxy);
    if (gamma > 1.0 && m.kind == ModelKind::RelativisticPower) {
      const double beta = std::get<PowerPotential>(m.potential.family()).beta;
      const double mb = std::pow(mn, beta);
      const double den = std::pow(nx, beta) * std::pow(ny, beta);
      env.lower = std::max(std::exp(log_first), std::exp(log_pair - pack.K4 * t * mb)) / den;
      env.upper = std::max(std::exp(log_first), std::exp(log_pair - (t / pack.K4) * mb)) / den;
      env.result_id = "exponential-tail";
      return env;
    }
    const double gm = m.g(mn);
    if (gamma > 1.0 && g_over_log_monotone(m)) {
      env.lower = std::max(std::exp(log_first), std::exp(log_pair - pack.K2 * t * gm)) / gg;
      env.upper = std::max(std::exp(log_first), std::exp(log_pair - (t / pack.K2) * gm)) / gg;
      env.result_id = "exponential-tail";
      return env;
    }
    const QuadResult Hl = eval_H(pack.K2 * t, x, y, pack, m.f, m.g, q);
    const QuadResult Hu = eval_H(t / pack.K2, x, y, pack, m.f, m.g, q);
    env.lower = std::max({std::exp(log_first), std::exp(log_pair - pack.K2 * t * gm), Hl.value}) / gg;
    env.upper = std::max({std::exp(log_first), std::exp(log_pair - (t / pack.K2) * gm), Hu.value}) / gg;
    env.quadrature_ok = Hl.converged && Hu.converged;
    env.result_id = "exponential-tail-h";
    return env;
  }
  throw OutsideCoverageError("no closed form covers this profile in the tail region; use envelope_heat_kernel");
}

Envelope simplified_ut1(const RegimeClass& regime, double t, const Point& x, const ConstantsPack& pack,
                        const Model& m) {
  const int d = m.dimension();
  const double nx = norm(x, d);
  const double lam = pack.lambda0_hat;
  Envelope env;
  env.t = t;
  env.constants_used = pack;
  if (regime.kind == Regime::AIUC) {
    const double t0 = std::max(30.0 * pack.t_b, pack.K1 * regime.tau0);
    if (!(t > t0)) throw OutsideCoverageError("ground-state mass form needs t > " + num(t0));
    env.lower = env.upper = std::exp(-lam * t) * ground_state_shape(m, nx);
    env.region = Region::PiucWindow;
    env.result_id = "ground-state-mass";
    return env;
  }
  if (!m.h) throw OutsideCoverageError("no link h is known for this potential; use envelope_ut1");
  const ThresholdData td(m.f, *m.h);
  const double t0 = std::max(pack.t_b, pack.K1 * td.lambda(pack.n0 + 4.0));
  if (!(t > t0)) throw OutsideCoverageError("non-aIUC mass forms need t > " + num(t0) + "; use envelope_ut1");
  const double window = td.window_radius(t / pack.K1);
  if (nx < window) {
    env.lower = env.upper = std::exp(-lam * t) * ground_state_shape(m, nx);
    env.region = Region::PiucWindow;
    env.result_id = "mass-window";
    return env;
  }
  const double gx = m.g(nx);
  env.lower = std::exp(-pack.K1 * t * gx) / gx;
  env.upper = std::exp(-(t / pack.K1) * gx) / gx;
  env.region = Region::OuterTail;
  env.result_id = "mass-tail";
  return env;
}

std::string to_string(Region r) {
  switch (r) {
    case Region::BothInner: return "both-inner";
    case Region::Mixed: return "mixed";
    case Region::BothOuter: return "both-outer";
    case Region::PiucWindow: return "piuc-window";
    case Region::OuterTail: return "outer-tail";
  }
  return "both-inner";
}

}  // namespace hkest
