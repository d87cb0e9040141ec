// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hkest/bounds.hpp"
#include "hkest/commands.hpp"
#include "hkest/conditions.hpp"
#include "hkest/feynman_kac.hpp"
#include "hkest/free_process.hpp"
#include "hkest/numeric.hpp"
#include "hkest/oracle.hpp"
#include "hkest/run_config.hpp"
#include "hkest/thresholds.hpp"

using namespace hkest;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Composite Simpson on each piece between sorted breakpoints.
double simpson(const std::function<double(double)>& fn, std::vector<double> bp, int panels) {
  std::sort(bp.begin(), bp.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    const double a = bp[k], b = bp[k + 1];
    if (!(b > a)) continue;
    const double h = (b - a) / panels;
    double s = fn(a) + fn(b);
    for (int i = 1; i < panels; ++i) s += fn(a + i * h) * (i % 2 ? 4.0 : 2.0);
    total += s * h / 3.0;
  }
  return total;
}

// Breakpoints of the annulus lo < |z| < hi on one side, with kinks at the listed points.
std::vector<double> pieces(double lo, double hi, std::initializer_list<double> kinks, double sign) {
  std::vector<double> bp{sign * lo, sign * hi};
  for (double k : kinks)
    if (std::abs(k) > lo && std::abs(k) < hi && k * sign > 0) bp.push_back(k);
  return bp;
}

double f1_at(const JumpProfile& f, double r) { return r > 0.0 ? eval_f1(f, r) : 1.0; }

ConstantsPack pack_n0(const Model& m) {
  ConstantsOptions opt;
  opt.n0 = 5;
  opt.compute_C3 = false;
  return estimate_constants(m, opt);
}

Outcome quadrature_fidelity() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> A(0.5, 1.8), Gm(0.0, 1.0), B(0.3, 2.0), T(0.2, 3.0), X(8.0, 40.0),
      Kp(0.5, 2.0), Ge(1.2, 3.0);
  double worst = 0.0;
  int draws = 0;
  const int panels = 20000;
  for (int k = 0; k < 20; ++k) {
    const Model m = make_model(JumpProfile::poly(1, A(gen), Gm(gen)), PotentialProfile::log_power(B(gen)));
    const auto pack = pack_n0(m);
    const double tau = T(gen), x = X(gen), y = X(gen), lo = pack.n0 + 2.0;
    const auto F = eval_F(tau, on_axis(x), on_axis(y), pack, m.f, m.g);
    auto fF = [&](double z) {
      return f1_at(m.f, std::abs(x - z)) * f1_at(m.f, std::abs(z - y)) * std::exp(-tau * eval_g(m.g, std::abs(z)));
    };
    const double hi = std::max(x, y);
    const double refF = simpson(fF, pieces(lo, hi, {x - 1, x, x + 1, y - 1, y, y + 1}, 1.0), panels) +
                        simpson(fF, pieces(lo, hi, {}, -1.0), panels);
    worst = std::max(worst, rel(F.value, refF));

    const auto G = eval_G(tau, on_axis(x), pack, m.f, m.g);
    auto fG = [&](double z) { return f1_at(m.f, std::abs(x - z)) * std::exp(-tau * eval_g(m.g, std::abs(z))); };
    const double refG = simpson(fG, pieces(lo, x, {x - 1}, 1.0), panels) + simpson(fG, pieces(lo, x, {}, -1.0), panels);
    worst = std::max(worst, rel(G.value, refG));
    draws += 2;
  }
  for (int k = 0; k < 20; ++k) {
    const double kappa = Kp(gen), gamma = Ge(gen);
    const Model m = make_model(JumpProfile::exponential(1, kappa, gamma), PotentialProfile::power(B(gen)));
    const auto pack = pack_n0(m);
    const double tau = T(gen), x = X(gen), y = X(gen), lo = pack.n0 + 2.0;
    const auto H = eval_H(tau, on_axis(x), on_axis(y), pack, m.f, m.g);
    auto fH = [&](double z) {
      const double a = std::abs(x - z), b = std::abs(z - y);
      return std::exp(-kappa * (a + b)) / std::pow(std::max(1.0, a) * std::max(1.0, b), gamma) *
             std::exp(-tau * eval_g(m.g, std::abs(z)));
    };
    const double hi = std::min(x, y);
    const double refH = simpson(fH, pieces(lo, hi, {x - 1, x, x + 1, y - 1, y, y + 1}, 1.0), panels) +
                        simpson(fH, pieces(lo, hi, {}, -1.0), panels);
    worst = std::max(worst, rel(H.value, refH));
    ++draws;
  }
  return {worst < 1e-6, fmt::format("{} integrals, worst relative error {:.3g}", draws, worst)};
}

Outcome threshold_laws() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> A(0.5, 1.8), Gm(0.0, 1.0), B(0.2, 0.9), U(0.0, 1.0);
  int failures = 0, points = 0;
  for (int k = 0; k < 10; ++k) {
    const bool stable = k % 2 == 0;
    const Model m = stable ? make_model(JumpProfile::poly(1, A(gen), Gm(gen)), PotentialProfile::log_power(B(gen)))
                           : make_model(JumpProfile::exponential(1, A(gen), 1.0 + Gm(gen)),
                                        PotentialProfile::power(B(gen)));
    const ThresholdData td(m.f, *m.h);
    // tau between Lambda(R0) and a few times it, so the window is a proper subset
    const double tau = td.lambda_at_R0() * (1.0 + 3.0 * U(gen));
    const auto grid = geometric_grid(td.R0(), 1e9, 1000);
    const auto res = check_threshold_laws(td, tau, grid);
    points += res.points;
    failures += res.below_violations + res.above_violations + res.monotone_violations;
  }
  return {failures == 0 && points == 10000, fmt::format("{} grid points, {} violations", points, failures)};
}

Outcome closed_forms() {
  double worst = 0.0;
  const double l1e = std::log(1.0 + std::numbers::e);
  for (double alpha : {0.5, 1.0, 1.6})
    for (double gamma : {0.0, 0.7})
      for (double beta : {0.25, 0.5, 0.8}) {
        const Model m = make_model(JumpProfile::poly(1, alpha, gamma), PotentialProfile::log_power(beta));
        const double s = 1.0 + alpha + gamma;
        for (double r : {3.0, 17.0, 1e3, 1e7})
          worst = std::max(worst, rel(lambda_of_r(m.f, *m.h, r), s * std::pow(std::log(r), 1.0 - beta)));
        for (double tau : {1.3 * s, 2.0 * s, 3.0 * s}) {
          const double closed = std::exp(std::pow(tau / s, 1.0 / (1.0 - beta)));
          worst = std::max(worst, rel(lambda_inv(m.f, *m.h, tau), closed));
          worst = std::max(worst, rel(lambda_inv_numeric(m.f, *m.h, tau), closed));
        }
        ConstantsOptions opt;
        opt.n0 = 5;
        opt.compute_C3 = false;
        opt.force_numeric = true;
        const auto p = estimate_constants(m, opt);
        worst = std::max(worst, rel(p.C6, 1.0));
        worst = std::max(worst, rel(p.C7, std::pow(l1e, beta)));
      }
  for (double kappa : {0.5, 1.0, 2.0})
    for (double gamma : {1.5, 2.0})
      for (double beta : {0.5, 1.0, 2.0}) {
        const Model m = make_model(JumpProfile::exponential(1, kappa, gamma), PotentialProfile::power(beta));
        ConstantsOptions opt;
        opt.n0 = 5;
        opt.compute_C3 = false;
        opt.force_numeric = true;
        const auto p = estimate_constants(m, opt);
        const double ke = kappa * std::numbers::e;
        // C6 is the reciprocal of (ke/(gamma+ke))^beta: V/g is bounded by it, not by its inverse
        worst = std::max(worst, rel(p.C6, std::pow((gamma + ke) / ke, beta)));
        worst = std::max(worst, rel(p.C7, std::pow(2.0 + gamma / kappa * std::log(2.0), beta)));
      }
  return {worst < 1e-12, fmt::format("worst relative difference {:.3g}", worst)};
}

Outcome cauchy_density() {
  const auto f = JumpProfile::poly(1, 1.0, 0.0);
  const LevySymbol sym(f, LevySymbol::default_sigma0(f));
  DensityGridSpec spec;
  spec.dx = 0.01;
  spec.n = 1 << 20;
  double sup = 0.0, mass = 0.0;
  for (double t : {1.0, 2.0}) {
    const auto p = density_fft(sym, t, spec);
    for (std::size_t i = 0; i < p.xs.size(); ++i) {
      const double x = p.xs[i];
      if (std::abs(x) > 20.0) continue;
      sup = std::max(sup, std::abs(p.values[i] - t / (std::numbers::pi * (t * t + x * x))));
    }
    mass = std::max(mass, std::abs(p.mass_defect));
  }
  DensityGridSpec ck;
  ck.dx = 0.02;
  ck.n = 1 << 16;
  const double defect = chapman_kolmogorov_defect(density_fft(sym, 1.0, ck), density_fft(sym, 2.0, ck), 20.0, 81);
  return {sup < 1e-6 && mass < 1e-6 && defect < 1e-5,
          fmt::format("sup error {:.3g}, mass defect {:.3g}, Chapman-Kolmogorov {:.3g}", sup, mass, defect)};
}

struct Family {
  Model model;
  LevySymbol sym;
  Spectrum spec;
  ConstantsPack pack;
};

Family default_family(double beta) {
  const auto f = JumpProfile::poly(1, 1.0, 0.0);
  const Model m = make_model(f, PotentialProfile::log_power(beta));
  const LevySymbol sym(f, LevySymbol::default_sigma0(f));
  Discretization d;
  d.half_width = 40.0;
  d.points = 2048;
  Spectrum spec = build_oracle(d, sym, as_grid_potential(m.potential));
  ConstantsOptions opt;
  opt.n0 = 5;
  opt.compute_C3 = false;
  opt.sigma0 = sym.sigma0();
  opt.lambda0_hat = spec.lambda0();
  return {m, sym, std::move(spec), estimate_constants(m, opt)};
}

std::vector<double> sweep(const Spectrum& s, double r_max, int stride) {
  std::vector<double> pts;
  for (double x : s.xs)
    if (std::abs(x) <= r_max && std::lround(x / s.delta()) % stride == 0) pts.push_back(x);
  return pts;
}

// e^{-lambda0 t} (1 ^ f/g)(x) (1 ^ f/g)(y): the ground-state comparison shape with the profile in place of phi_0.
ShapeFn profile_shape(const Family& fam) {
  const double l0 = fam.spec.lambda0();
  const Model m = fam.model;
  return [l0, m](double t, double x, double y) {
    const double v = std::exp(-l0 * t) * ground_state_shape(m, std::abs(x)) * ground_state_shape(m, std::abs(y));
    return ShapePair{v, v};
  };
}

const std::vector<double> kTimes{35.0, 60.0, 100.0};

std::string per_t(const VerificationReport& r) {
  std::string s;
  for (std::size_t i = 0; i < r.times.size(); ++i) s += fmt::format("{}{:.6g}", i ? ", " : "", r.C_hat_per_t[i]);
  return "[" + s + "]";
}

Outcome envelope_aiuc() {
  const Family fam = default_family(2.0);
  const auto pts = sweep(fam.spec, 30.0, 4);
  const auto all = [](double, double, double) { return true; };
  const auto rep = verify_envelope(fam.spec, oracle_ground_state_shape(fam.spec), kTimes, pts, all, "ground-state");
  const auto prof = verify_envelope(fam.spec, profile_shape(fam), kTimes, pts, all, "profile");
  return {std::isfinite(rep.C_hat) && rep.t_drift_all < 0.25,
          fmt::format("C_hat per t {}, drift {:.3g}; with 1 ^ f/g in place of phi_0: {}, drift {:.3g}", per_t(rep),
                      rep.t_drift_all, per_t(prof), prof.t_drift_all)};
}

Outcome envelope_window() {
  const Family fam = default_family(0.5);
  const ThresholdData td(fam.model.f, *fam.model.h);
  const double K2 = fam.pack.K2;
  const auto pts = sweep(fam.spec, 30.0, 4);
  const auto window = [&](double t, double x, double y) {
    return std::min(std::abs(x), std::abs(y)) < td.window_radius(t / K2);
  };
  const auto rep = verify_envelope(fam.spec, oracle_ground_state_shape(fam.spec), kTimes, pts, window, "window");
  const auto prof = verify_envelope(fam.spec, profile_shape(fam), kTimes, pts, window, "profile");
  const bool inside_ok = std::isfinite(rep.C_hat) && rep.t_drift_all < 0.25;
  const double w = td.window_radius(35.0 / K2);
  const auto drift = diagonal_drift(fam.spec, 35.0, w, 10.0 * w);
  return {inside_ok && drift.pass,
          fmt::format("inside the window C_hat per t {}, drift {:.3g} (1 ^ f/g shape: {}); beyond r = {:.4g} the "
                      "ratio fold over a decade is {:.5g}, {}, needs >= 3",
                      per_t(rep), rep.t_drift_all, per_t(prof), w, drift.fold,
                      drift.monotone ? "monotone" : "not monotone")};
}

Outcome direct_jump() {
  const auto radii = default_djp_radii();
  std::string detail;
  bool ok = true;
  for (double g : {1.25, 1.5 + 1e-2, 2.0, 0.5, 1.0}) {
    const auto r = check_direct_jump(JumpProfile::exponential(1, 1.0, g), 1, radii);
    const bool expect = g > 1.0;
    ok = ok && r.converged == expect;
    detail += fmt::format("{}gamma={}: {}", detail.empty() ? "" : "; ", g, r.converged ? "converges" : "diverges");
  }
  return {ok, detail};
}

Outcome spectral_regularity() {
  const auto V1 = PotentialProfile::log_power(1.0);
  const bool s2 = exp_integral_condition(V1, 2.0, V1.R0()).convergent();
  const bool s05 = exp_integral_condition(V1, 0.5, V1.R0()).convergent();
  const auto f = JumpProfile::poly(1, 1.0, 0.0);
  const LevySymbol sym(f, LevySymbol::default_sigma0(f));
  Discretization d;
  const auto one = trace_box_study(d, sym, as_grid_potential(V1), 2.0);
  const auto half = trace_box_study(d, sym, as_grid_potential(PotentialProfile::log_power(0.5)), 2.0);
  return {s2 && !s05 && one.stable && !half.stable,
          fmt::format("s=2 {}, s=0.5 {}; trace change M 40->50: beta=1 {:.3g}, beta=1/2 {:.3g} (threshold {})",
                      s2 ? "convergent" : "divergent", s05 ? "convergent" : "divergent", one.relative_change,
                      half.relative_change, one.threshold)};
}

Outcome monte_carlo() {
  const auto f = JumpProfile::poly(1, 1.0, 0.0);
  const LevySymbol sym(f, LevySymbol::default_sigma0(f));
  const auto V = as_grid_potential(PotentialProfile::log_power(2.0));
  Discretization d;
  const Spectrum spec = build_oracle(d, sym, V);
  const double oracle = row_sums(spec, 2.0)(spec.nearest(0.0));
  PathConfig cfg;
  cfg.n_paths = 100000;
  const auto est = simulate_ut1(0.0, 2.0, V, sym, cfg);
  const double z = std::abs(est.mean - oracle) / est.std_error;
  return {z <= 3.0, fmt::format("MC {:.6f} +- {:.2g}, oracle {:.6f}, z = {:.3g}", est.mean, est.std_error, oracle, z)};
}

std::string dir_digest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& p : files) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    all += p.filename().string() + "\n" + ss.str();
  }
  return all;
}

Outcome reproducibility() {
  RunConfig c;
  c.n0 = 5;
  c.grid.M = 20;
  c.grid.N = 512;
  c.verify.r_max = 14;
  c.mc.enabled = true;
  c.mc.paths = 5000;
  c.mc.time_step = 0.01;
  c.seed = 77;
  const fs::path root = fs::temp_directory_path() / "hkest_acceptance_repro";
  fs::remove_all(root);
  std::ostringstream log;
  std::vector<std::string> digests;
  for (int threads : {1, 1, 8}) {
    c.threads = threads;
    const fs::path out = root / std::to_string(digests.size());
    cmd_verify(c, out, log);
    digests.push_back(dir_digest(out));
  }
  const bool same_run = digests[0] == digests[1];
  const bool same_threads = digests[0] == digests[2];
  return {same_run && same_threads && !digests[0].empty(),
          fmt::format("repeat run {}, 1 vs 8 threads {}", same_run ? "identical" : "differs",
                      same_threads ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"quadrature fidelity", quadrature_fidelity},
      {"threshold laws", threshold_laws},
      {"closed-form cross-checks", closed_forms},
      {"free-density oracle", cauchy_density},
      {"envelope verification, aIUC", envelope_aiuc},
      {"envelope verification, window", envelope_window},
      {"direct-jump dichotomy", direct_jump},
      {"spectral regularity", spectral_regularity},
      {"Monte Carlo cross-check", monte_carlo},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    fmt::print("criterion {:>2} {}: {} ({:.1f} s) {}\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, secs,
               o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria pass\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
