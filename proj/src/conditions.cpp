#include "hkest/conditions.hpp"

#include <limits>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "hkest/error.hpp"

namespace hkest {

namespace {

constexpr double kE = std::numbers::e;
constexpr double kPi = std::numbers::pi;

void require_d12(int d) {
  if (d != 1 && d != 2) throw PreconditionError("only d = 1 and d = 2 are supported");
}

// log(2 pi I_0(z)) for z >= 0.
double log_two_pi_i0(double z) {
  if (z < 500.0) return std::log(2.0 * kPi * std::cyl_bessel_i(0.0, z));
  return std::log(2.0 * kPi) + z - 0.5 * std::log(2.0 * kPi * z) + std::log1p(1.0 / (8.0 * z) + 9.0 / (128.0 * z * z));
}

double ratio_1d(const JumpProfile& f, double x, const QuadratureSettings& q, bool& ok) {
  const double lfx = f.log_value(x);
  auto side = [&](double w) { return std::exp(f.log_value(w) + f.log_value(x + w) - lfx); };
  QuadResult total = integrate_to_infinity(side, 1.0, q);
  total.value *= 2.0;
  total.error *= 2.0;
  if (x > 2.0) {
    auto mid = [&](double y) { return std::exp(f.log_value(y) + f.log_value(x - y) - lfx); };
    const double pts[3] = {1.0, 0.5 * x, x - 1.0};
    total += integrate(mid, std::span<const double>(pts, 3), q);
  }
  ok = total.converged;
  return total.value;
}

double ratio_2d(const JumpProfile& f, double X, const QuadratureSettings& q, bool& ok) {
  const double lfx = f.log_value(X);
  ok = true;
  auto angular = [&](double rho) {
    const double c = (rho * rho + X * X - 1.0) / (2.0 * rho * X);
    if (c <= -1.0) return 0.0;
    const double theta0 = c >= 1.0 ? 0.0 : std::acos(c);
    const double lrho = f.log_value(rho);
    auto inner = [&](double th) {
      const double dist = std::sqrt(std::max(rho * rho + X * X - 2.0 * rho * X * std::cos(th), 1e-300));
      return std::exp(f.log_value(dist) + lrho - lfx);
    };
    QuadResult r = integrate(inner, theta0, kPi, q);
    if (!r.converged) ok = false;
    return 2.0 * r.value * rho;
  };
  std::vector<double> pts{1.0};
  for (double b : {X - 1.0, X, X + 1.0})
    if (b > pts.back()) pts.push_back(b);
  QuadResult total = integrate(angular, pts, q);
  total += integrate_to_infinity(angular, pts.back(), q);
  ok = ok && total.converged;
  return total.value;
}

double int_cond_integrand(const JumpProfile& f, int d, double r) {
  const double c = -f.log_derivative(r);
  const double lf = f.log_value(r);
  if (d == 1) {
    // y and -y contribute e^{c r} and e^{-c r}.
    return std::exp(lf + c * r) + std::exp(lf - c * r);
  }
  return std::exp(log_two_pi_i0(c * r) + lf + std::log(r));
}

template <class Ratio>
double grid_sup(const std::vector<double>& grid, Ratio ratio) {
  double best = 0.0;
  for (double r : grid) best = std::max(best, ratio(r));
  return best;
}

}  // namespace

std::vector<double> default_djp_radii() {
  std::vector<double> r;
  for (int k = 0; k <= 11; ++k) r.push_back(std::ldexp(1.0, k));
  return r;
}

double direct_jump_ratio(const JumpProfile& f, int d, double radius, const QuadratureSettings& q, bool* ok) {
  require_d12(d);
  if (!(radius >= 1.0)) throw DomainError("direct-jump radii must be >= 1");
  bool good = true;
  const double v = d == 1 ? ratio_1d(f, radius, q, good) : ratio_2d(f, radius, q, good);
  if (ok) *ok = good && std::isfinite(v);
  return v;
}

DjpReport check_direct_jump(const JumpProfile& f, int d, std::span<const double> radii, const QuadratureSettings& q) {
  require_d12(d);
  DjpReport rep;
  bool all_ok = true;
  std::vector<double> ratios;
  for (double r : radii) {
    bool ok = true;
    const double v = direct_jump_ratio(f, d, r, q, &ok);
    rep.samples.push_back({r, v, ok});
    ratios.push_back(v);
    all_ok = all_ok && ok;
    if (v > rep.C3_hat) {
      rep.C3_hat = v;
      rep.sup_location = r;
    }
  }
  rep.trend = classify_partial_sums(ratios);
  rep.converged = all_ok && rep.trend.verdict == SeriesVerdict::Convergent;
  if (rep.converged && std::isfinite(rep.trend.limit)) rep.C3_hat = std::max(rep.C3_hat, rep.trend.limit);
  if (!rep.converged && rep.trend.verdict == SeriesVerdict::Divergent) rep.C3_hat = std::numeric_limits<double>::infinity();
  return rep;
}

IntCondReport int_cond_partials(const JumpProfile& f, int d, int doublings) {
  require_d12(d);
  IntCondReport rep;
  QuadratureSettings q;
  q.abs_tol = 1e-300;
  q.rel_tol = 1e-10;
  double sum = 0.0;
  for (int k = 0; k < doublings; ++k) {
    const double a = std::ldexp(1.0, k), b = std::ldexp(1.0, k + 1);
    sum += integrate_log_scale([&](double r) { return int_cond_integrand(f, d, r); }, a, b, q).value;
    rep.shell_radii.push_back(b);
    rep.partials.push_back(sum);
  }
  rep.trend = classify_partial_sums(rep.partials);
  return rep;
}

DjpCriterion check_djp_sufficient(const JumpProfile& f, int d) {
  require_d12(d);
  if (const auto* p = std::get_if<PolyJump>(&f.family())) {
    // int_1^inf r^{-d-alpha} r^{d-1} dr < inf for every alpha > 0.
    if (p->alpha > 0.0) return DjpCriterion::Doubling;
    return DjpCriterion::Unknown;
  }
  if (const auto* e = std::get_if<ExponentialJump>(&f.family())) {
    // Polynomial factor r^{-gamma} is doubling; integrable against r^{d-1} iff gamma > d.
    if (e->gamma > d) return DjpCriterion::Tempered;
    // e^{-kappa r} r^{-gamma} is log-convex for gamma >= 0.
    if (int_cond_partials(f, d).trend.verdict == SeriesVerdict::Convergent) return DjpCriterion::LogConvex;
    return DjpCriterion::Unknown;
  }
  const auto& t = std::get<TabulatedJump>(f.family());
  const std::size_t n = t.knots.size();
  const double p = -(t.log_values[n - 1] - t.log_values[n - 2]) / std::log(t.knots[n - 1] / t.knots[n - 2]);
  if (p > d) return DjpCriterion::Doubling;
  bool convex = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double slope = (t.log_values[i + 1] - t.log_values[i]) / (t.knots[i + 1] - t.knots[i]);
    if (slope < prev) convex = false;
    prev = slope;
  }
  if (convex && int_cond_partials(f, d).trend.verdict == SeriesVerdict::Convergent) return DjpCriterion::LogConvex;
  return DjpCriterion::Unknown;
}

void derive_k_constants(ConstantsPack& p) {
  p.K = 4.0 * p.C6 * p.C7 * p.C7;
  p.K1 = 2.0 * p.K;
  p.K2 = 3.0 * p.K;
  p.K3 = 4.0 * p.K;
  p.K4 = p.C6 * p.K2;
}

std::optional<int> select_n0(const PotentialProfile& g, double theta, int n_cap) {
  const int start = static_cast<int>(std::ceil(g.R0() + 2.0));
  if (g(static_cast<double>(n_cap - 2)) < theta) return std::nullopt;
  int lo = start, hi = n_cap;
  if (g(static_cast<double>(lo - 2)) >= theta) return lo;
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (g(static_cast<double>(mid - 2)) >= theta)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double numeric_C2(const JumpProfile& f, bool* stable) {
  double r_max = 1e4;
  if (const auto* t = std::get_if<TabulatedJump>(&f.family())) r_max = std::max(r_max, 8.0 * t->knots.back());
  auto ratio = [&](double r) { return std::exp(f.log_value(r) - f.log_value(r + 1.0)); };
  auto grid = geometric_grid(1.0, r_max, 4001);
  grid.insert(grid.end(), {kE - 1.0, kE});
  auto coarse = geometric_grid(1.0, r_max, 1001);
  coarse.insert(coarse.end(), {kE - 1.0, kE});
  if (const auto* t = std::get_if<TabulatedJump>(&f.family())) {
    for (double k : t->knots) {
      if (k >= 1.0) grid.push_back(k);
      if (k - 1.0 >= 1.0) grid.push_back(k - 1.0);
    }
  }
  const double fine = grid_sup(grid, ratio);
  if (stable) *stable = std::abs(fine - grid_sup(coarse, ratio)) <= 1e-3 * fine;
  return fine;
}

double numeric_C7(const PotentialProfile& g, bool* stable) {
  const double R0 = g.R0();
  auto ratio = [&](double r) { return g(r + 1.0) / g(r); };
  auto grid = geometric_grid(R0, R0 * 1e6, 4001);
  auto coarse = geometric_grid(R0, R0 * 1e6, 1001);
  const double fine = grid_sup(grid, ratio);
  if (stable) *stable = std::abs(fine - grid_sup(coarse, ratio)) <= 1e-3 * fine;
  return fine;
}

double numeric_C6(const PotentialProfile& V, const PotentialProfile& g) {
  auto grid = geometric_grid(1e-3, 1e8, 6001);
  grid.insert(grid.end(), {0.0, 1.0, kE, V.R0(), g.R0()});
  double best = 1.0;
  for (double r : grid) {
    const double q = V(r) / g(r);
    best = std::max({best, q, 1.0 / q});
  }
  return best;
}

double numeric_inf_ratio(const PotentialProfile& V, const PotentialProfile& g) {
  auto grid = geometric_grid(1e-3, 1e8, 6001);
  // Dense patch around r = e, where log r / r peaks.
  auto patch = linear_grid(1.0, 2.0 * kE, 20001);
  grid.insert(grid.end(), patch.begin(), patch.end());
  grid.insert(grid.end(), {0.0, kE, V.R0(), g.R0()});
  double best = std::numeric_limits<double>::infinity();
  for (double r : grid) best = std::min(best, V(r) / g(r));
  return best;
}

ConstantsPack estimate_constants(const Model& m, const ConstantsOptions& opt) {
  if (!(opt.t_b > 0.0)) throw PreconditionError("t_b must be > 0");
  if (!(opt.sigma0 > 0.0)) throw PreconditionError("sigma0 must be > 0");
  ConstantsPack p;
  p.t_b = opt.t_b;
  p.R0 = m.g.R0();
  p.lambda0_hat = opt.lambda0_hat;
  p.C1 = std::max(opt.sigma0, 1.0 / opt.sigma0);

  const bool closed = !opt.force_numeric;
  if (closed && std::holds_alternative<PolyJump>(m.f.family())) {
    auto ratio = [&](double r) { return std::exp(m.f.log_value(r) - m.f.log_value(r + 1.0)); };
    // The ratio is monotone on [1, e-1], [e-1, e] (no interior maximum) and [e, inf).
    p.C2 = std::max({ratio(1.0), ratio(kE - 1.0), ratio(kE)});
  } else if (closed && std::holds_alternative<ExponentialJump>(m.f.family())) {
    const auto& ej = std::get<ExponentialJump>(m.f.family());
    p.C2 = std::exp(ej.kappa) * std::pow(2.0, ej.gamma);
  } else {
    bool stable = true;
    p.C2 = numeric_C2(m.f, &stable);
    p.heuristic = true;
    if (!stable) p.notes.push_back("C2 grid sup not stable under refinement");
  }

  if (closed && m.kind == ModelKind::StableLogPower) {
    const double beta = std::get<LogPowerPotential>(m.potential.family()).beta;
    p.C6 = 1.0;
    p.C7 = std::pow(std::log(1.0 + kE), beta);
  } else if (closed && m.kind == ModelKind::RelativisticPower) {
    const double beta = std::get<PowerPotential>(m.potential.family()).beta;
    const auto& ej = std::get<ExponentialJump>(m.f.family());
    // (kappa e / (gamma + kappa e))^beta is inf V/g; the comparability constant is its reciprocal.
    p.C6 = std::pow((ej.gamma + ej.kappa * kE) / (ej.kappa * kE), beta);
    p.C7 = std::pow(2.0 + (ej.gamma / ej.kappa) * std::log(2.0), beta);
    p.notes.push_back("C6 = 1 / inf(V/g)");
  } else {
    p.C6 = numeric_C6(m.potential, m.g);
    bool stable = true;
    p.C7 = numeric_C7(m.g, &stable);
    p.heuristic = true;
    if (!stable) p.notes.push_back("C7 grid sup not stable under refinement");
  }
  if (m.f.heuristic_tail()) p.heuristic = true;
  derive_k_constants(p);

  if (opt.compute_C3 && m.dimension() <= 2) {
    const auto radii = default_djp_radii();
    DjpReport djp = check_direct_jump(m.f, m.dimension(), radii);
    p.C3 = djp.C3_hat;
    p.C3_converged = djp.converged;
  }

  p.theta = opt.theta.value_or(10.0 * p.C6 * (1.0 + std::abs(p.lambda0_hat)));
  if (opt.n0) {
    if (*opt.n0 < static_cast<int>(std::ceil(p.R0 + 2.0)))
      throw PreconditionError("n0 must be an integer >= R0 + 2");
    p.n0 = *opt.n0;
    p.n0_user = true;
    p.n0_threshold_met = m.g(p.n0 - 2.0) >= p.theta;
  } else if (auto n = select_n0(m.g, p.theta)) {
    p.n0 = *n;
  } else {
    p.n0 = static_cast<int>(std::ceil(p.R0 + 2.0));
    p.n0_threshold_met = false;
    p.notes.push_back("g(n0-2) >= theta not reachable below 1e6; n0 falls back to ceil(R0+2)");
  }
  return p;
}

GrowthReport check_growth_conditions(const Model& m, int grid_points) {
  if (grid_points < 200) throw PreconditionError("growth checks need at least 200 grid points");
  GrowthReport rep;
  const auto grid = geometric_grid(1e-3, 1e4, grid_points);

  rep.A1b = true;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (m.f.log_value(grid[i]) > m.f.log_value(grid[i - 1])) rep.A1b = false;

  // Bounded ratio f(r)/f(r+1): the tail quarter may not exceed the bulk maximum.
  {
    const auto rg = geometric_grid(1.0, 1e4, grid_points);
    double bulk = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < rg.size(); ++i) {
      const double v = m.f.log_value(rg[i]) - m.f.log_value(rg[i] + 1.0);
      if (i < 3 * rg.size() / 4)
        bulk = std::max(bulk, v);
      else
        tail = std::max(tail, v);
    }
    rep.A1c = std::isfinite(bulk) && tail <= bulk + 1e-9;
    if (!rep.A1c) rep.notes.push_back("f(r)/f(r+1) still growing at the end of the grid");
  }

  const double R0 = m.g.R0();
  const auto gg = geometric_grid(R0, R0 * 1e6, grid_points);
  rep.A3b = m.g(gg.back()) > m.g(gg.front());
  for (std::size_t i = 1; i < gg.size(); ++i)
    if (m.g(gg[i]) < m.g(gg[i - 1])) rep.A3b = false;
  {
    double bulk = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < gg.size(); ++i) {
      const double v = m.g(gg[i] + 1.0) / m.g(gg[i]);
      if (i < 3 * gg.size() / 4)
        bulk = std::max(bulk, v);
      else
        tail = std::max(tail, v);
    }
    rep.A3c = std::isfinite(bulk) && tail <= bulk * (1.0 + 1e-12);
  }

  if (m.h) {
    const auto sg = geometric_grid(m.h->domain_start(), m.h->domain_start() * 1e6, grid_points);
    int up = 0, down = 0;
    for (std::size_t i = 1; i < sg.size(); ++i) {
      const double a = (*m.h)(sg[i - 1]) / sg[i - 1];
      const double b = (*m.h)(sg[i]) / sg[i];
      if (b > a * (1.0 + 1e-12)) ++up;
      if (b < a * (1.0 - 1e-12)) ++down;
    }
    rep.A4_monotone_ratio = !(up > 0 && down > 0);
  } else {
    rep.notes.push_back("no link h with g = h(|log f|) is known for this potential");
  }
  return rep;
}

std::string to_string(DjpCriterion c) {
  switch (c) {
    case DjpCriterion::Doubling: return "doubling";
    case DjpCriterion::Tempered: return "tempered";
    case DjpCriterion::LogConvex: return "log-convex";
    case DjpCriterion::Unknown: return "unknown";
  }
  return "unknown";
}

}  // namespace hkest
