#include "hkest/commands.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "hkest/error.hpp"

namespace hkest {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) { return fmt::format("{:.12g}", v); }

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

double rel_change(double a, double b) { return std::abs(b - a) / std::max(std::abs(a), 1e-300); }

// YAML emitter with the settings every report shares.
struct Doc {
  YAML::Emitter e;
  Doc() {
    e.SetDoublePrecision(12);
    e << YAML::BeginMap;
  }
  template <class T>
  Doc& kv(const std::string& k, const T& v) {
    e << YAML::Key << k << YAML::Value << v;
    return *this;
  }
  Doc& num_kv(const std::string& k, double v) {
    e << YAML::Key << k << YAML::Value << num(v);
    return *this;
  }
  Doc& key(const std::string& k) {
    e << YAML::Key << k << YAML::Value;
    return *this;
  }
  std::string str() {
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
  }
};

void emit_pack(YAML::Emitter& e, const ConstantsPack& p) {
  e << YAML::BeginMap;
  e << YAML::Key << "R0" << YAML::Value << num(p.R0);
  e << YAML::Key << "n0" << YAML::Value << p.n0;
  e << YAML::Key << "n0_threshold_met" << YAML::Value << p.n0_threshold_met;
  e << YAML::Key << "n0_user" << YAML::Value << p.n0_user;
  e << YAML::Key << "theta" << YAML::Value << num(p.theta);
  e << YAML::Key << "t_b" << YAML::Value << num(p.t_b);
  e << YAML::Key << "C1" << YAML::Value << num(p.C1);
  e << YAML::Key << "C2" << YAML::Value << num(p.C2);
  e << YAML::Key << "C3" << YAML::Value << num(p.C3);
  e << YAML::Key << "C3_converged" << YAML::Value << p.C3_converged;
  if (p.C4) e << YAML::Key << "C4" << YAML::Value << num(*p.C4);
  if (p.C5) e << YAML::Key << "C5" << YAML::Value << num(*p.C5);
  e << YAML::Key << "C6" << YAML::Value << num(p.C6);
  e << YAML::Key << "C7" << YAML::Value << num(p.C7);
  e << YAML::Key << "K" << YAML::Value << num(p.K);
  e << YAML::Key << "K1" << YAML::Value << num(p.K1);
  e << YAML::Key << "K2" << YAML::Value << num(p.K2);
  e << YAML::Key << "K3" << YAML::Value << num(p.K3);
  e << YAML::Key << "K4" << YAML::Value << num(p.K4);
  e << YAML::Key << "lambda0_hat" << YAML::Value << num(p.lambda0_hat);
  e << YAML::Key << "heuristic" << YAML::Value << p.heuristic;
  if (!p.notes.empty()) {
    e << YAML::Key << "notes" << YAML::Value << YAML::BeginSeq;
    for (const auto& n : p.notes) e << n;
    e << YAML::EndSeq;
  }
  e << YAML::EndMap;
}

void emit_checks(YAML::Emitter& e, const std::vector<NamedCheck>& checks) {
  e << YAML::BeginSeq;
  for (const auto& c : checks) {
    e << YAML::BeginMap << YAML::Key << "name" << YAML::Value << c.name << YAML::Key << "pass" << YAML::Value
      << c.pass;
    if (!c.detail.empty()) e << YAML::Key << "detail" << YAML::Value << c.detail;
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
}

DensityGridSpec density_spec(const RunConfig& cfg) {
  DensityGridSpec s;
  s.dx = cfg.density.dx;
  s.n = static_cast<std::size_t>(cfg.density.n);
  return s;
}

// Rows [0, n) computed on `threads` workers, results kept in index order.
template <class Row, class Fn>
std::vector<Row> ordered_parallel(std::size_t n, int threads, Fn fn) {
  std::vector<Row> rows(n);
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(threads), 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) rows[i] = fn(i);
    return rows;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) rows[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

}  // namespace

CheckResult run_check(const RunConfig& cfg) {
  CheckResult r;
  const Model m = make_run_model(cfg);
  const int d = m.dimension();
  r.growth = check_growth_conditions(m);

  const auto radii = default_djp_radii();
  r.djp = check_direct_jump(m.f, d, radii);
  r.criterion = check_djp_sufficient(m.f, d);

  ConstantsOptions opt = make_constants_options(cfg, std::nullopt);
  opt.compute_C3 = false;
  r.pack = estimate_constants(m, opt);
  r.pack.C3 = r.djp.C3_hat;
  r.pack.C3_converged = r.djp.converged;

  r.checks.push_back({"decreasing-profile", r.growth.A1b, ""});
  r.checks.push_back({"profile-step-ratio", r.growth.A1c, "C2 = " + num(r.pack.C2)});
  r.checks.push_back({"potential-growth", r.growth.A3b, ""});
  r.checks.push_back({"potential-step-ratio", r.growth.A3c, "C7 = " + num(r.pack.C7)});
  r.checks.push_back({"link-ratio-monotone", r.growth.A4_monotone_ratio, m.h ? "" : "no link h known"});
  r.checks.push_back({"direct-jump", r.djp.converged,
                      "C3_hat = " + num(r.djp.C3_hat) + ", sufficient criterion: " + to_string(r.criterion)});

  if (d == 1) {
    try {
      const LevySymbol sym = make_symbol(cfg, m.f);
      const DensityGridSpec spec = density_spec(cfg);
      r.density_upper = check_A2a(sym, m.f, cfg.t_b, spec);
      r.pack.C4 = r.density_upper->C4;
      r.pack.C5 = r.density_upper->C5;
      r.checks.push_back({"density-upper", r.density_upper->pass,
                          "C4 = " + num(r.density_upper->C4) + ", C5 = " + num(r.density_upper->C5)});
      r.density_lower = check_density_lower(sym, m.f, cfg.t_b, spec);
      r.checks.push_back({"density-lower", r.density_lower->pass, "C = " + num(r.density_lower->C)});
      r.density_near_sup = check_A2b(sym, cfg.t_b, 0.5, spec);
      r.checks.push_back({"density-near-origin", std::isfinite(*r.density_near_sup),
                          "sup p_t on 0.5 <= |x| <= 2 = " + num(*r.density_near_sup)});
    } catch (const std::exception& e) {
      r.checks.push_back({"density-upper", false, e.what()});
    }
  } else {
    r.pack.notes.push_back("transition densities are only computed in d = 1");
  }

  r.pass = true;
  for (const auto& c : r.checks) {
    if (!c.pass) {
      r.pass = false;
      r.first_failure = c.name;
      break;
    }
  }
  return r;
}

ClassifyResult run_classify(const RunConfig& cfg) {
  ClassifyResult r;
  const Model m = make_run_model(cfg);
  if (!m.h) throw PreconditionError("no link h relates this potential to the profile; cannot classify");
  ConstantsOptions opt = make_constants_options(cfg, std::nullopt);
  opt.compute_C3 = false;
  r.pack = estimate_constants(m, opt);
  const ThresholdData td(m.f, *m.h);
  r.regime = td.regime();
  r.closed_form = td.closed_form();
  for (double rad : geometric_grid(td.R0(), td.R0() * 1e6, 13)) r.lambda_table.emplace_back(rad, td.lambda(rad));
  for (double t : cfg.times) {
    const double T = t * cfg.t_b;
    WindowRow w;
    w.t = t;
    w.tau = T / r.pack.K2;
    w.radius = r.regime.kind == Regime::AIUC ? kInf : td.window_radius(w.tau);
    r.windows.push_back(w);
  }
  if (r.regime.kind == Regime::AIUC) {
    r.headline = "aIUC; window = inf";
  } else {
    r.headline = "non-aIUC";
    for (const auto& w : r.windows) r.headline += "; window(t=" + num(w.t) + ") = " + num(w.radius);
  }
  return r;
}

std::vector<BoundsRow> run_bounds(const RunConfig& cfg) {
  const Model m = make_run_model(cfg);
  ConstantsOptions opt = make_constants_options(cfg, std::nullopt);
  opt.compute_C3 = false;
  const ConstantsPack pack = estimate_constants(m, opt);
  std::optional<RegimeClass> regime;
  if (m.h) regime = classify(*m.h);

  struct Job {
    double t, x, y;
  };
  std::vector<Job> jobs;
  for (double t : cfg.times)
    for (double x : cfg.bounds.xs)
      for (double y : cfg.bounds.ys) jobs.push_back({t, x, y});

  return ordered_parallel<BoundsRow>(jobs.size(), cfg.threads, [&](std::size_t i) {
    const Job& j = jobs[i];
    const double T = j.t * cfg.t_b;
    BoundsRow row{j.t, j.x, j.y, "uncovered", std::nan(""), std::nan(""), "none"};
    if (!(T > 30.0 * cfg.t_b)) return row;
    Envelope env;
    bool have = false;
    if (regime) {
      try {
        env = simplified_bounds(*regime, T, on_axis(j.x), on_axis(j.y), pack, m);
        have = true;
      } catch (const OutsideCoverageError&) {
      }
    }
    if (!have) env = envelope_heat_kernel(T, on_axis(j.x), on_axis(j.y), pack, m);
    row.region = to_string(env.region);
    row.lower = env.lower;
    row.upper = env.upper;
    row.result_id = env.result_id;
    return row;
  });
}

namespace {

struct RegionPlan {
  std::string label;
  ShapeFn shape;
  RegionSelector inside;
};

std::vector<double> sweep_points(const Spectrum& spec, double r_max, int stride) {
  std::vector<double> pts;
  const double D = spec.delta();
  for (double x : spec.xs) {
    const long k = std::lround(x / D);
    if (std::abs(x) <= r_max && k % stride == 0) pts.push_back(x);
  }
  return pts;
}

// Fitted constant of the oracle ground-state comparison on a given spectrum.
double ground_state_C_hat(const Spectrum& spec, const RunConfig& cfg, const RegionSelector& inside) {
  const auto pts = sweep_points(spec, std::min(cfg.verify.r_max, spec.disc.half_width - 5.0), cfg.verify.stride);
  std::vector<double> times;
  for (double t : cfg.times) times.push_back(t * cfg.t_b);
  EnvelopeCheckOptions o;
  o.t_b = cfg.t_b;
  o.threads = cfg.threads;
  o.keep_samples = false;
  return verify_envelope(spec, oracle_ground_state_shape(spec), times, pts, inside, "ground-state", o).C_hat;
}

}  // namespace

VerifyResult run_verify(const RunConfig& cfg) {
  VerifyResult r;
  const Model m = make_run_model(cfg);
  const Discretization disc = make_discretization(cfg);
  try {
    disc.validate();
    r.grid_valid = true;
  } catch (const PreconditionError& e) {
    r.grid_error = e.what();
  }
  r.flags.push_back({"grid-resolution", r.grid_valid, r.grid_error});
  if (!r.grid_valid) return r;
  if (m.dimension() != 1) throw PreconditionError("the spectral oracle is one-dimensional; set profile.d = 1");

  const LevySymbol sym = make_symbol(cfg, m.f);
  const GridPotential V = as_grid_potential(m.potential);
  const Spectrum spec = build_oracle(disc, sym, V);
  r.lambda0 = spec.lambda0();
  r.gap = spec.eigenvalues(1) - spec.eigenvalues(0);
  r.eigenvalues.assign(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.eigenvalues.size());
  r.flags.push_back({"ground-state-positive", spec.ground_state_positive, ""});
  r.flags.push_back({"simple-ground-state", r.gap > 0.0, "gap = " + num(r.gap)});

  ConstantsOptions opt = make_constants_options(cfg, r.lambda0);
  opt.compute_C3 = false;
  r.pack = estimate_constants(m, opt);
  if (!m.h) throw PreconditionError("no link h relates this potential to the profile; cannot verify regimes");
  const ThresholdData td(m.f, *m.h);
  r.regime = td.regime();

  r.eig = verify_eig_profile(spec, m.f, m.g, cfg.verify.r_max, cfg.verify.band);
  r.flags.push_back({"eigenfunction-profile", r.eig.pass, "band = " + num(r.eig.band)});

  std::vector<double> times;
  for (double t : cfg.times) times.push_back(t * cfg.t_b);
  const double K2 = r.pack.K2;
  const bool aiuc = r.regime.kind == Regime::AIUC;
  const double r_max = std::min(cfg.verify.r_max, disc.half_width - 5.0);
  const RegionSelector window = [&, aiuc, K2](double t, double x, double y) {
    if (aiuc) return true;
    return std::min(std::abs(x), std::abs(y)) < td.window_radius(t / K2);
  };

  std::vector<RegionPlan> plans;
  plans.push_back({"ground-state", oracle_ground_state_shape(spec), window});
  {
    const ConstantsPack pack = r.pack;
    const RegimeClass regime = r.regime;
    const double t_cover = aiuc ? aiuc_time_threshold(pack, regime) : nonaiuc_time_threshold(pack, m);
    ShapeFn closed = [pack, regime, &m](double t, double x, double y) {
      const Envelope env = simplified_bounds(regime, t, on_axis(x), on_axis(y), pack, m);
      return ShapePair{env.lower, env.upper};
    };
    RegionSelector covered = [window, t_cover](double t, double x, double y) {
      return t > t_cover && window(t, x, y);
    };
    plans.push_back({"closed-form", closed, covered});
  }

  const auto pts = sweep_points(spec, r_max, cfg.verify.stride);
  for (const auto& plan : plans) {
    EnvelopeCheckOptions o;
    o.t_b = cfg.t_b;
    o.threads = cfg.threads;
    o.drift_limit = cfg.verify.drift_limit;
    try {
      VerificationReport rep = verify_envelope(spec, plan.shape, times, pts, plan.inside, plan.label, o);
      r.flags.push_back({"envelope:" + plan.label, rep.pass,
                         "C_hat = " + num(rep.C_hat) + ", t-drift = " + num(rep.t_drift_all)});
      r.envelopes.push_back(std::move(rep));
    } catch (const DomainError& e) {
      r.notes.push_back("region " + plan.label + " skipped: " + e.what());
    }
  }

  if (!aiuc) {
    const double t = *std::min_element(times.begin(), times.end());
    const double w = td.window_radius(t / K2);
    if (w < disc.half_width - 5.0) {
      r.beyond_window = diagonal_drift(spec, t, std::max(w, spec.delta()), 10.0 * w);
      r.notes.push_back("beyond the window at t = " + num(t) + ": ratio fold " + num(r.beyond_window->fold) +
                        (r.beyond_window->monotone ? ", monotone" : ", not monotone"));
    }
  }

  for (double t : cfg.verify.spectral_times) r.spectral.push_back(spectral_functions(spec, t * cfg.t_b));
  for (const auto& s : r.spectral) {
    const bool ok = std::isfinite(s.trace) && std::isfinite(s.hilbert_schmidt) && std::isfinite(s.heat_content);
    r.flags.push_back({"spectral-functions-finite(t=" + num(s.t) + ")", ok, "trace = " + num(s.trace)});
  }

  if (cfg.verify.refine) {
    const double base_C = r.envelopes.empty() ? std::nan("") : r.envelopes.front().C_hat;
    std::vector<std::pair<std::string, Discretization>> variants;
    Discretization fine = disc;
    fine.points = 2 * disc.points;
    variants.emplace_back("grid-2N", fine);
    variants.emplace_back("box-M+10", extend_box(disc, 10.0));
    for (const auto& [label, dd] : variants) {
      const Spectrum s2 = build_oracle(dd, sym, V);
      RefinementCheck rc;
      rc.label = label;
      rc.lambda0 = s2.lambda0();
      rc.C_hat = ground_state_C_hat(s2, cfg, window);
      rc.band = verify_eig_profile(s2, m.f, m.g, cfg.verify.r_max, cfg.verify.band).band;
      rc.drift_lambda0 = rel_change(r.lambda0, rc.lambda0);
      rc.drift_C_hat = rel_change(base_C, rc.C_hat);
      rc.drift_band = rel_change(r.eig.band, rc.band);
      const double lim = cfg.verify.refine_limit;
      rc.pass = rc.drift_lambda0 < lim && rc.drift_C_hat < lim && rc.drift_band < lim;
      r.flags.push_back({"refinement:" + label, rc.pass,
                         "lambda0 drift " + num(rc.drift_lambda0) + ", C_hat drift " + num(rc.drift_C_hat) +
                             ", band drift " + num(rc.drift_band)});
      r.refinements.push_back(rc);
    }
  }

  if (cfg.mc.enabled) {
    const Eigen::VectorXd rows = row_sums(spec, cfg.mc.t * cfg.t_b);
    const PathConfig pc = make_path_config(cfg);
    for (double x0 : cfg.mc.x0) {
      McCheck mc;
      mc.estimate = simulate_ut1(x0, cfg.mc.t * cfg.t_b, V, sym, pc, cfg.threads);
      mc.oracle = rows(spec.nearest(x0));
      mc.z = std::abs(mc.estimate.mean - mc.oracle) / mc.estimate.std_error;
      mc.pass = mc.z <= 3.0;
      r.flags.push_back({"monte-carlo(x0=" + num(x0) + ")", mc.pass, "z = " + num(mc.z)});
      r.mc.push_back(mc);
    }
  }

  r.pass = std::all_of(r.flags.begin(), r.flags.end(), [](const NamedCheck& c) { return c.pass; });
  return r;
}

std::vector<McEstimate> run_mc(const RunConfig& cfg, std::vector<ConvergenceRow>* study) {
  const Model m = make_run_model(cfg);
  const LevySymbol sym = make_symbol(cfg, m.f);
  const GridPotential V = as_grid_potential(m.potential);
  const PathConfig pc = make_path_config(cfg);
  std::vector<McEstimate> out;
  for (double x0 : cfg.mc.x0) out.push_back(simulate_ut1(x0, cfg.mc.t * cfg.t_b, V, sym, pc, cfg.threads));
  if (study && cfg.mc.convergence && !cfg.mc.x0.empty())
    *study = convergence_study(cfg.mc.x0.front(), cfg.mc.t * cfg.t_b, V, sym, pc, cfg.threads);
  return out;
}

std::string check_report_yaml(const RunConfig& cfg, const CheckResult& r) {
  Doc doc;
  doc.kv("command", "check");
  doc.kv("profile", make_profile(cfg).describe());
  doc.kv("pass", r.pass);
  if (!r.pass) doc.kv("first_failure", r.first_failure);
  doc.key("checks");
  emit_checks(doc.e, r.checks);
  doc.key("direct_jump");
  doc.e << YAML::BeginMap << YAML::Key << "C3_hat" << YAML::Value << num(r.djp.C3_hat) << YAML::Key
        << "sup_location" << YAML::Value << num(r.djp.sup_location) << YAML::Key << "converged" << YAML::Value
        << r.djp.converged << YAML::Key << "rule" << YAML::Value << r.djp.trend.rule << YAML::Key
        << "sufficient_criterion" << YAML::Value << to_string(r.criterion) << YAML::Key << "samples"
        << YAML::Value << YAML::BeginSeq;
  for (const auto& s : r.djp.samples)
    doc.e << YAML::Flow << YAML::BeginSeq << num(s.radius) << num(s.ratio) << YAML::EndSeq;
  doc.e << YAML::EndSeq << YAML::EndMap;
  doc.key("constants");
  emit_pack(doc.e, r.pack);
  if (!r.growth.notes.empty()) {
    doc.key("growth_notes");
    doc.e << YAML::BeginSeq;
    for (const auto& n : r.growth.notes) doc.e << n;
    doc.e << YAML::EndSeq;
  }
  return doc.str();
}

std::string classify_report_yaml(const RunConfig&, const ClassifyResult& r) {
  Doc doc;
  doc.kv("command", "classify");
  doc.kv("regime", to_string(r.regime.kind));
  doc.kv("basis", to_string(r.regime.basis));
  doc.num_kv("tau0", r.regime.tau0);
  doc.kv("closed_form", r.closed_form ? *r.closed_form : std::string("none"));
  doc.kv("summary", r.headline);
  doc.key("constants");
  emit_pack(doc.e, r.pack);
  doc.key("lambda_table");
  doc.e << YAML::BeginSeq;
  for (const auto& [rad, lam] : r.lambda_table)
    doc.e << YAML::Flow << YAML::BeginMap << YAML::Key << "r" << YAML::Value << num(rad) << YAML::Key << "Lambda"
          << YAML::Value << num(lam) << YAML::EndMap;
  doc.e << YAML::EndSeq;
  doc.key("windows");
  doc.e << YAML::BeginSeq;
  for (const auto& w : r.windows)
    doc.e << YAML::Flow << YAML::BeginMap << YAML::Key << "t" << YAML::Value << num(w.t) << YAML::Key << "tau"
          << YAML::Value << num(w.tau) << YAML::Key << "radius" << YAML::Value << num(w.radius) << YAML::EndMap;
  doc.e << YAML::EndSeq;
  return doc.str();
}

std::string bounds_csv(const std::vector<BoundsRow>& rows) {
  std::string s = "t,x,y,region,lower,upper,result_id\n";
  for (const auto& r : rows)
    s += fmt::format("{},{},{},{},{},{},{}\n", num(r.t), num(r.x), num(r.y), r.region, num(r.lower), num(r.upper),
                     r.result_id);
  return s;
}

std::string verify_report_yaml(const RunConfig& cfg, const VerifyResult& r) {
  Doc doc;
  doc.kv("command", "verify");
  doc.kv("profile", make_profile(cfg).describe());
  doc.key("grid");
  doc.e << YAML::Flow << YAML::BeginMap << YAML::Key << "M" << YAML::Value << num(cfg.grid.M) << YAML::Key << "N"
        << YAML::Value << cfg.grid.N << YAML::Key << "small_jumps" << YAML::Value << cfg.grid.small_jumps
        << YAML::EndMap;
  doc.kv("pass", r.pass);
  doc.key("flags");
  emit_checks(doc.e, r.flags);
  if (!r.grid_valid) return doc.str();
  doc.num_kv("lambda0", r.lambda0);
  doc.num_kv("gap", r.gap);
  doc.kv("regime", to_string(r.regime.kind));
  doc.num_kv("tau0", r.regime.tau0);
  doc.key("constants");
  emit_pack(doc.e, r.pack);
  doc.key("eigenfunction_profile");
  doc.e << YAML::BeginMap << YAML::Key << "band" << YAML::Value << num(r.eig.band) << YAML::Key << "band_limit"
        << YAML::Value << num(r.eig.band_limit) << YAML::Key << "core_min" << YAML::Value << num(r.eig.core_min)
        << YAML::Key << "core_max" << YAML::Value << num(r.eig.core_max) << YAML::Key << "points" << YAML::Value
        << r.eig.xs.size() << YAML::Key << "pass" << YAML::Value << r.eig.pass << YAML::EndMap;
  doc.key("envelopes");
  doc.e << YAML::BeginSeq;
  for (const auto& v : r.envelopes) {
    doc.e << YAML::BeginMap << YAML::Key << "region" << YAML::Value << v.region << YAML::Key << "times"
          << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double t : v.times) doc.e << num(t);
    doc.e << YAML::EndSeq << YAML::Key << "C_hat_per_t" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double c : v.C_hat_per_t) doc.e << num(c);
    doc.e << YAML::EndSeq << YAML::Key << "C_hat" << YAML::Value << num(v.C_hat) << YAML::Key << "t_drift_last"
          << YAML::Value << num(v.t_drift_last) << YAML::Key << "t_drift_all" << YAML::Value << num(v.t_drift_all)
          << YAML::Key << "samples" << YAML::Value << v.samples.size() << YAML::Key << "pass" << YAML::Value
          << v.pass << YAML::EndMap;
  }
  doc.e << YAML::EndSeq;
  if (r.beyond_window) {
    const auto& b = *r.beyond_window;
    doc.key("beyond_window");
    doc.e << YAML::BeginMap << YAML::Key << "t" << YAML::Value << num(b.t) << YAML::Key << "radii" << YAML::Value
          << YAML::Flow << YAML::BeginSeq;
    for (double x : b.radii) doc.e << num(x);
    doc.e << YAML::EndSeq << YAML::Key << "ratios" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double x : b.ratios) doc.e << num(x);
    doc.e << YAML::EndSeq << YAML::Key << "monotone" << YAML::Value << b.monotone << YAML::Key << "fold"
          << YAML::Value << num(b.fold) << YAML::EndMap;
  }
  doc.key("spectral_functions");
  doc.e << YAML::BeginSeq;
  for (const auto& s : r.spectral)
    doc.e << YAML::Flow << YAML::BeginMap << YAML::Key << "t" << YAML::Value << num(s.t) << YAML::Key << "trace"
          << YAML::Value << num(s.trace) << YAML::Key << "hilbert_schmidt" << YAML::Value
          << num(s.hilbert_schmidt) << YAML::Key << "heat_content" << YAML::Value << num(s.heat_content)
          << YAML::EndMap;
  doc.e << YAML::EndSeq;
  if (!r.refinements.empty()) {
    doc.key("refinement");
    doc.e << YAML::BeginSeq;
    for (const auto& rc : r.refinements)
      doc.e << YAML::Flow << YAML::BeginMap << YAML::Key << "label" << YAML::Value << rc.label << YAML::Key
            << "lambda0" << YAML::Value << num(rc.lambda0) << YAML::Key << "C_hat" << YAML::Value << num(rc.C_hat)
            << YAML::Key << "band" << YAML::Value << num(rc.band) << YAML::Key << "pass" << YAML::Value << rc.pass
            << YAML::EndMap;
    doc.e << YAML::EndSeq;
  }
  if (!r.mc.empty()) {
    doc.key("monte_carlo");
    doc.e << YAML::BeginSeq;
    for (const auto& mc : r.mc)
      doc.e << YAML::Flow << YAML::BeginMap << YAML::Key << "x0" << YAML::Value << num(mc.estimate.x0) << YAML::Key
            << "t" << YAML::Value << num(mc.estimate.t) << YAML::Key << "mean" << YAML::Value
            << num(mc.estimate.mean) << YAML::Key << "std_error" << YAML::Value << num(mc.estimate.std_error)
            << YAML::Key << "oracle" << YAML::Value << num(mc.oracle) << YAML::Key << "pass" << YAML::Value
            << mc.pass << YAML::EndMap;
    doc.e << YAML::EndSeq;
  }
  if (!r.notes.empty()) {
    doc.key("notes");
    doc.e << YAML::BeginSeq;
    for (const auto& n : r.notes) doc.e << n;
    doc.e << YAML::EndSeq;
  }
  return doc.str();
}

std::string spectrum_csv(const std::vector<double>& eigenvalues) {
  std::string s = "k,lambda\n";
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) s += fmt::format("{},{}\n", k, num(eigenvalues[k]));
  return s;
}

std::string ratios_csv(const VerifyResult& r) {
  std::string s = "t,x,y,ratio,region\n";
  for (const auto& v : r.envelopes) {
    // Thin the sweep to a coarse lattice; the full statistics are in the report.
    for (const auto& p : v.samples) {
      if (std::fmod(std::abs(p.x), 1.0) > 1e-9 || std::fmod(std::abs(p.y), 1.0) > 1e-9) continue;
      s += fmt::format("{},{},{},{},{}\n", num(p.t), num(p.x), num(p.y), num(p.ratio), v.region);
    }
  }
  return s;
}

std::string eig_profile_csv(const EigProfileReport& r) {
  std::string s = "x,ratio\n";
  for (std::size_t i = 0; i < r.xs.size(); ++i) s += fmt::format("{},{}\n", num(r.xs[i]), num(r.ratios[i]));
  return s;
}

std::string mc_csv(const std::vector<McEstimate>& rows, const std::vector<ConvergenceRow>& study) {
  std::string s = "x0,t,mean,std_error,n_paths,jump_cutoff,time_step,seed,kind\n";
  auto line = [&](const McEstimate& e, const char* kind) {
    s += fmt::format("{},{},{},{},{},{},{},{},{}\n", num(e.x0), num(e.t), num(e.mean), num(e.std_error), e.n_paths,
                     num(e.config.jump_cutoff), num(e.config.time_step), e.config.seed, kind);
  };
  for (const auto& e : rows) line(e, "estimate");
  for (const auto& c : study) line(c.estimate, "convergence");
  return s;
}

int cmd_check(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const CheckResult r = run_check(cfg);
  write_file(out / "check.yaml", check_report_yaml(cfg, r));
  if (r.pass) {
    log << "check: all conditions pass\n";
    return 0;
  }
  std::string detail;
  for (const auto& c : r.checks)
    if (c.name == r.first_failure) detail = c.detail;
  log << "check failed: " << r.first_failure << (detail.empty() ? "" : " (" + detail + ")") << "\n";
  return 1;
}

int cmd_classify(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const ClassifyResult r = run_classify(cfg);
  write_file(out / "classify.yaml", classify_report_yaml(cfg, r));
  log << r.headline << "\n";
  return 0;
}

int cmd_bounds(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto rows = run_bounds(cfg);
  write_file(out / "bounds.csv", bounds_csv(rows));
  const auto uncovered = std::count_if(rows.begin(), rows.end(), [](const BoundsRow& r) { return r.region == "uncovered"; });
  log << "bounds: " << rows.size() << " rows, " << uncovered << " uncovered\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const VerifyResult r = run_verify(cfg);
  write_file(out / "verify_report.yaml", verify_report_yaml(cfg, r));
  if (r.grid_valid) {
    write_file(out / "spectrum.csv", spectrum_csv(r.eigenvalues));
    write_file(out / "ratios.csv", ratios_csv(r));
    write_file(out / "eig_profile.csv", eig_profile_csv(r.eig));
  }
  for (const auto& f : r.flags)
    if (!f.pass) log << "verify: flag " << f.name << " failed" << (f.detail.empty() ? "" : " (" + f.detail + ")") << "\n";
  log << "verify: " << (r.pass ? "pass" : "fail") << "\n";
  return r.pass ? 0 : 1;
}

int cmd_mc(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  std::vector<ConvergenceRow> study;
  const auto rows = run_mc(cfg, &study);
  write_file(out / "mc.csv", mc_csv(rows, study));
  for (const auto& e : rows)
    log << "mc: U_t1(" << num(e.x0) << ") at t = " << num(e.t) << ": " << num(e.mean) << " +- " << num(e.std_error)
        << "\n";
  return 0;
}

int cmd_report(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const int c = cmd_check(cfg, out, log);
  const int k = cmd_classify(cfg, out, log);
  const int b = cmd_bounds(cfg, out, log);
  const int v = cmd_verify(cfg, out, log);
  int m = 0;
  if (cfg.mc.enabled) m = cmd_mc(cfg, out, log);
  Doc doc;
  doc.kv("command", "report");
  doc.key("exit_codes");
  doc.e << YAML::BeginMap << YAML::Key << "check" << YAML::Value << c << YAML::Key << "classify" << YAML::Value << k
        << YAML::Key << "bounds" << YAML::Value << b << YAML::Key << "verify" << YAML::Value << v << YAML::Key << "mc"
        << YAML::Value << m << YAML::EndMap;
  doc.key("config");
  doc.e << YAML::Literal << serialize_config(cfg);
  write_file(out / "report.yaml", doc.str());
  return (c | k | b | v | m) ? 1 : 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heat-kernel estimate toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "YAML run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  const char* names[] = {"check", "classify", "bounds", "verify", "mc", "report"};
  for (const char* n : names) app.add_subcommand(n);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output = out_dir;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    validate_config(cfg);
    const fs::path dir = cfg.output;
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "check") return cmd_check(cfg, dir, out);
    if (cmd == "classify") return cmd_classify(cfg, dir, out);
    if (cmd == "bounds") return cmd_bounds(cfg, dir, out);
    if (cmd == "verify") return cmd_verify(cfg, dir, out);
    if (cmd == "mc") return cmd_mc(cfg, dir, out);
    return cmd_report(cfg, dir, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hkest
