#include "hkest/run_config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hkest/error.hpp"

namespace hkest {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

// Walks one mapping, remembering the dotted path for error messages and
// rejecting keys nobody asked for.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsMap()) throw ConfigError(path_, line_of(node_), "expected a mapping");
  }

  ~Section() = default;

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(join(key), line_of(kv.first), "unknown key");
    }
  }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    out = convert<T>(node_[key], key);
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!node_ || !node_[key] || node_[key].IsNull()) return;
    out = convert<T>(node_[key], key);
  }

  template <class T>
  void read(const std::string& key, std::vector<T>& out) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    const YAML::Node n = node_[key];
    if (!n.IsSequence()) throw ConfigError(join(key), line_of(n), "expected a list");
    out.clear();
    for (const auto& item : n) out.push_back(convert<T>(item, key));
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(node_ ? node_[key] : YAML::Node(), join(key));
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  int line(const std::string& key) const { return node_ && node_[key] ? line_of(node_[key]) : line_of(node_); }

 private:
  template <class T>
  T convert(const YAML::Node& n, const std::string& key) const {
    try {
      if (!n.IsScalar()) throw ConfigError(join(key), line_of(n), "expected a scalar");
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(join(key), line_of(n), "cannot read value '" + n.Scalar() + "'");
    }
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

struct Lines {
  std::map<std::string, int> at;
  int of(const std::string& field) const {
    const auto it = at.find(field);
    return it == at.end() ? 0 : it->second;
  }
};

void check(bool ok, const std::string& field, const std::string& what, const Lines* lines = nullptr) {
  if (!ok) throw ConfigError(field, lines ? lines->of(field) : 0, what);
}

void validate_with_lines(const RunConfig& c, const Lines* L) {
  const auto& p = c.profile;
  check(p.family == "poly" || p.family == "exponential" || p.family == "tabulated", "profile.family",
        "must be poly, exponential or tabulated", L);
  check(p.d == 1 || p.d == 2, "profile.d", "must be 1 or 2", L);
  if (p.family == "poly") {
    check(p.alpha > 0.0 && p.alpha < 2.0, "profile.alpha", "must lie in (0, 2)", L);
    check(p.gamma >= 0.0, "profile.gamma", "must be >= 0", L);
  } else if (p.family == "exponential") {
    check(p.kappa > 0.0, "profile.kappa", "must be > 0", L);
    check(p.gamma >= 0.0, "profile.gamma", "must be >= 0", L);
    if (p.core_gamma) check(*p.core_gamma >= 0.0, "profile.core_gamma", "must be >= 0", L);
  } else {
    check(p.knots.size() >= 3 && p.knots.size() == p.values.size(), "profile.knots",
          "needs at least three knots and one value per knot", L);
  }
  check(c.potential.family == "log_power" || c.potential.family == "power", "potential.family",
        "must be log_power or power", L);
  check(c.potential.beta > 0.0, "potential.beta", "must be > 0", L);
  if (c.potential.R0) check(*c.potential.R0 > 0.0, "potential.R0", "must be > 0", L);
  if (c.sigma0) check(*c.sigma0 > 0.0, "sigma0", "must be > 0", L);
  check(c.diffusion >= 0.0, "diffusion", "must be >= 0", L);
  check(c.t_b > 0.0, "t_b", "must be > 0", L);
  if (c.n0) check(*c.n0 >= 1, "n0", "must be >= 1", L);
  if (c.theta) check(*c.theta > 0.0, "theta", "must be > 0", L);
  check(c.grid.M > 0.0, "grid.M", "must be > 0", L);
  check(c.grid.N >= 2, "grid.N", "must be >= 2", L);
  check(c.grid.small_jumps == "diffusion" || c.grid.small_jumps == "truncate", "grid.small_jumps",
        "must be diffusion or truncate", L);
  check(c.density.dx > 0.0, "density.dx", "must be > 0", L);
  check(c.density.n >= 16 && c.density.n % 2 == 0, "density.n", "must be even and >= 16", L);
  check(!c.times.empty(), "times", "needs at least one time", L);
  for (double t : c.times) check(t > 0.0, "times", "every time must be > 0", L);
  check(c.verify.r_max > 0.0, "verify.r_max", "must be > 0", L);
  check(c.verify.stride >= 1, "verify.stride", "must be >= 1", L);
  check(c.verify.band > 1.0, "verify.band", "must be > 1", L);
  check(c.verify.drift_limit > 0.0, "verify.drift_limit", "must be > 0", L);
  check(c.verify.refine_limit > 0.0, "verify.refine_limit", "must be > 0", L);
  for (double t : c.verify.spectral_times) check(t > 0.0, "verify.spectral_times", "every time must be > 0", L);
  check(c.mc.t > 0.0, "mc.t", "must be > 0", L);
  check(c.mc.paths >= 1, "mc.paths", "must be >= 1", L);
  check(c.mc.jump_cutoff > 0.0 && c.mc.jump_cutoff <= 1.0, "mc.jump_cutoff", "must lie in (0, 1]", L);
  check(c.mc.time_step > 0.0 && c.mc.time_step <= 0.01 * c.mc.t * (1.0 + 1e-12), "mc.time_step",
        "must lie in (0, t/100]", L);
  check(c.threads >= 1, "threads", "must be >= 1", L);
  check(!c.output.empty(), "output", "must not be empty", L);

  // The profile constructors carry their own checks (monotone tables etc.).
  try {
    const JumpProfile f = make_profile(c);
    make_potential(c, f);
  } catch (const PreconditionError& e) {
    throw ConfigError("profile", L ? L->of("profile") : 0, e.what());
  } catch (const DomainError& e) {
    throw ConfigError("profile", L ? L->of("profile") : 0, e.what());
  }
}

void record_lines(const YAML::Node& node, const std::string& path, Lines& lines) {
  if (!node.IsMap()) return;
  for (const auto& kv : node) {
    const std::string key = path.empty() ? kv.first.as<std::string>() : path + "." + kv.first.as<std::string>();
    lines.at[key] = line_of(kv.first);
    record_lines(kv.second, key, lines);
  }
}

}  // namespace

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", e.mark.line >= 0 ? e.mark.line + 1 : 0, e.msg);
  }
  RunConfig c;
  if (!root || root.IsNull()) return c;
  Section top(root, "");

  Section prof = top.sub("profile");
  prof.read("family", c.profile.family);
  prof.read("d", c.profile.d);
  prof.read("alpha", c.profile.alpha);
  prof.read("gamma", c.profile.gamma);
  prof.read("kappa", c.profile.kappa);
  prof.read("core_gamma", c.profile.core_gamma);
  prof.read("knots", c.profile.knots);
  prof.read("values", c.profile.values);
  prof.finish();

  Section pot = top.sub("potential");
  pot.read("family", c.potential.family);
  pot.read("beta", c.potential.beta);
  pot.read("R0", c.potential.R0);
  pot.finish();

  top.read("sigma0", c.sigma0);
  top.read("diffusion", c.diffusion);
  top.read("t_b", c.t_b);
  top.read("n0", c.n0);
  top.read("theta", c.theta);
  top.read("lambda0", c.lambda0);

  Section grid = top.sub("grid");
  grid.read("M", c.grid.M);
  grid.read("N", c.grid.N);
  grid.read("small_jumps", c.grid.small_jumps);
  grid.finish();

  Section dens = top.sub("density");
  dens.read("dx", c.density.dx);
  dens.read("n", c.density.n);
  dens.finish();

  top.read("times", c.times);

  Section bnd = top.sub("bounds");
  bnd.read("xs", c.bounds.xs);
  bnd.read("ys", c.bounds.ys);
  bnd.finish();

  Section ver = top.sub("verify");
  ver.read("r_max", c.verify.r_max);
  ver.read("stride", c.verify.stride);
  ver.read("band", c.verify.band);
  ver.read("drift_limit", c.verify.drift_limit);
  ver.read("refine", c.verify.refine);
  ver.read("refine_limit", c.verify.refine_limit);
  ver.read("spectral_times", c.verify.spectral_times);
  ver.finish();

  Section mc = top.sub("mc");
  mc.read("enabled", c.mc.enabled);
  mc.read("x0", c.mc.x0);
  mc.read("t", c.mc.t);
  mc.read("paths", c.mc.paths);
  mc.read("jump_cutoff", c.mc.jump_cutoff);
  mc.read("time_step", c.mc.time_step);
  mc.read("convergence", c.mc.convergence);
  mc.finish();

  top.read("seed", c.seed);
  top.read("threads", c.threads);
  top.read("output", c.output);
  top.finish();

  Lines lines;
  record_lines(root, "", lines);
  validate_with_lines(c, &lines);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const RunConfig& cfg) { validate_with_lines(cfg, nullptr); }

std::string serialize_config(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  auto seq = [&](const char* key, const std::vector<double>& v) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double x : v) out << x;
    out << YAML::EndSeq;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "profile" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "family" << YAML::Value << c.profile.family;
  out << YAML::Key << "d" << YAML::Value << c.profile.d;
  out << YAML::Key << "alpha" << YAML::Value << c.profile.alpha;
  out << YAML::Key << "gamma" << YAML::Value << c.profile.gamma;
  out << YAML::Key << "kappa" << YAML::Value << c.profile.kappa;
  if (c.profile.core_gamma) out << YAML::Key << "core_gamma" << YAML::Value << *c.profile.core_gamma;
  if (!c.profile.knots.empty()) {
    seq("knots", c.profile.knots);
    seq("values", c.profile.values);
  }
  out << YAML::EndMap;

  out << YAML::Key << "potential" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "family" << YAML::Value << c.potential.family;
  out << YAML::Key << "beta" << YAML::Value << c.potential.beta;
  if (c.potential.R0) out << YAML::Key << "R0" << YAML::Value << *c.potential.R0;
  out << YAML::EndMap;

  if (c.sigma0) out << YAML::Key << "sigma0" << YAML::Value << *c.sigma0;
  out << YAML::Key << "diffusion" << YAML::Value << c.diffusion;
  out << YAML::Key << "t_b" << YAML::Value << c.t_b;
  if (c.n0) out << YAML::Key << "n0" << YAML::Value << *c.n0;
  if (c.theta) out << YAML::Key << "theta" << YAML::Value << *c.theta;
  if (c.lambda0) out << YAML::Key << "lambda0" << YAML::Value << *c.lambda0;

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "M" << YAML::Value << c.grid.M;
  out << YAML::Key << "N" << YAML::Value << c.grid.N;
  out << YAML::Key << "small_jumps" << YAML::Value << c.grid.small_jumps;
  out << YAML::EndMap;

  out << YAML::Key << "density" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dx" << YAML::Value << c.density.dx;
  out << YAML::Key << "n" << YAML::Value << c.density.n;
  out << YAML::EndMap;

  seq("times", c.times);

  out << YAML::Key << "bounds" << YAML::Value << YAML::BeginMap;
  seq("xs", c.bounds.xs);
  seq("ys", c.bounds.ys);
  out << YAML::EndMap;

  out << YAML::Key << "verify" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "r_max" << YAML::Value << c.verify.r_max;
  out << YAML::Key << "stride" << YAML::Value << c.verify.stride;
  out << YAML::Key << "band" << YAML::Value << c.verify.band;
  out << YAML::Key << "drift_limit" << YAML::Value << c.verify.drift_limit;
  out << YAML::Key << "refine" << YAML::Value << c.verify.refine;
  out << YAML::Key << "refine_limit" << YAML::Value << c.verify.refine_limit;
  seq("spectral_times", c.verify.spectral_times);
  out << YAML::EndMap;

  out << YAML::Key << "mc" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << c.mc.enabled;
  seq("x0", c.mc.x0);
  out << YAML::Key << "t" << YAML::Value << c.mc.t;
  out << YAML::Key << "paths" << YAML::Value << c.mc.paths;
  out << YAML::Key << "jump_cutoff" << YAML::Value << c.mc.jump_cutoff;
  out << YAML::Key << "time_step" << YAML::Value << c.mc.time_step;
  out << YAML::Key << "convergence" << YAML::Value << c.mc.convergence;
  out << YAML::EndMap;

  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "threads" << YAML::Value << c.threads;
  out << YAML::Key << "output" << YAML::Value << c.output;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

JumpProfile make_profile(const RunConfig& c) {
  const auto& p = c.profile;
  if (p.family == "poly") return JumpProfile::poly(p.d, p.alpha, p.gamma);
  if (p.family == "exponential") return JumpProfile::exponential(p.d, p.kappa, p.gamma, p.core_gamma);
  return JumpProfile::tabulated(p.d, p.knots, p.values);
}

PotentialProfile make_potential(const RunConfig& c, const JumpProfile&) {
  if (c.potential.family == "log_power") return PotentialProfile::log_power(c.potential.beta, c.potential.R0);
  return PotentialProfile::power(c.potential.beta, c.potential.R0);
}

Model make_run_model(const RunConfig& c) {
  const JumpProfile f = make_profile(c);
  return make_model(f, make_potential(c, f));
}

LevySymbol make_symbol(const RunConfig& c, const JumpProfile& f) {
  return LevySymbol(f, c.sigma0 ? *c.sigma0 : LevySymbol::default_sigma0(f), c.diffusion);
}

Discretization make_discretization(const RunConfig& c) {
  Discretization d;
  d.half_width = c.grid.M;
  d.points = c.grid.N;
  d.small_jumps = c.grid.small_jumps == "truncate" ? SmallJumpPolicy::Truncate : SmallJumpPolicy::Diffusion;
  return d;
}

PathConfig make_path_config(const RunConfig& c) {
  PathConfig p;
  p.jump_cutoff = c.mc.jump_cutoff;
  p.time_step = c.mc.time_step;
  p.n_paths = c.mc.paths;
  p.seed = c.seed;
  p.small_jumps = c.grid.small_jumps == "truncate" ? SmallJumpPolicy::Truncate : SmallJumpPolicy::Diffusion;
  return p;
}

ConstantsOptions make_constants_options(const RunConfig& c, std::optional<double> lambda0) {
  ConstantsOptions o;
  o.t_b = c.t_b;
  o.sigma0 = c.sigma0 ? *c.sigma0 : LevySymbol::default_sigma0(make_profile(c));
  o.lambda0_hat = lambda0 ? *lambda0 : (c.lambda0 ? *c.lambda0 : 0.0);
  o.n0 = c.n0;
  o.theta = c.theta;
  return o;
}

}  // namespace hkest
