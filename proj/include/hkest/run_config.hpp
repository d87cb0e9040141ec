#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hkest/conditions.hpp"
#include "hkest/feynman_kac.hpp"
#include "hkest/free_process.hpp"
#include "hkest/oracle.hpp"
#include "hkest/profiles.hpp"

namespace hkest {

struct ProfileSpec {
  std::string family = "poly";  // poly | exponential | tabulated
  int d = 1;
  double alpha = 1.0;
  double gamma = 0.0;
  double kappa = 1.0;
  std::optional<double> core_gamma;
  std::vector<double> knots;
  std::vector<double> values;

  bool operator==(const ProfileSpec&) const = default;
};

struct PotentialSpec {
  std::string family = "log_power";  // log_power | power
  double beta = 2.0;
  std::optional<double> R0;

  bool operator==(const PotentialSpec&) const = default;
};

struct GridSpec {
  double M = 40.0;
  int N = 2048;
  std::string small_jumps = "diffusion";  // diffusion | truncate

  bool operator==(const GridSpec&) const = default;
};

struct DensitySpec {
  double dx = 0.05;
  long n = 80000;

  bool operator==(const DensitySpec&) const = default;
};

struct BoundsSpec {
  std::vector<double> xs{0.0, 5.0, 10.0, 20.0};
  std::vector<double> ys{0.0, 5.0, 10.0, 20.0};

  bool operator==(const BoundsSpec&) const = default;
};

struct VerifySpec {
  double r_max = 30.0;     // |x|, |y| sampled up to here
  int stride = 4;          // every stride-th grid point enters the ratio sweeps
  double band = 50.0;      // eigenfunction profile band
  double drift_limit = 0.25;
  bool refine = true;      // rerun at 2N and at M + 10
  double refine_limit = 0.10;
  std::vector<double> spectral_times{2.0};

  bool operator==(const VerifySpec&) const = default;
};

struct McSpec {
  bool enabled = false;
  std::vector<double> x0{0.0};
  double t = 2.0;
  long paths = 100000;
  double jump_cutoff = 0.02;
  double time_step = 0.005;
  bool convergence = false;

  bool operator==(const McSpec&) const = default;
};

// Times are in units of t_b.
struct RunConfig {
  ProfileSpec profile;
  PotentialSpec potential;
  std::optional<double> sigma0;  // default: LevySymbol::default_sigma0
  double diffusion = 0.0;
  double t_b = 1.0;
  std::optional<int> n0;
  std::optional<double> theta;
  std::optional<double> lambda0;
  GridSpec grid;
  DensitySpec density;
  std::vector<double> times{35.0, 60.0, 100.0};
  BoundsSpec bounds;
  VerifySpec verify;
  McSpec mc;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output = "out";

  bool operator==(const RunConfig&) const = default;
};

// Throws ConfigError carrying the offending field and line.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// Re-checks every numeric constraint of the modules the config feeds.
void validate_config(const RunConfig& cfg);

JumpProfile make_profile(const RunConfig& cfg);
PotentialProfile make_potential(const RunConfig& cfg, const JumpProfile& f);
Model make_run_model(const RunConfig& cfg);
LevySymbol make_symbol(const RunConfig& cfg, const JumpProfile& f);
Discretization make_discretization(const RunConfig& cfg);
PathConfig make_path_config(const RunConfig& cfg);
ConstantsOptions make_constants_options(const RunConfig& cfg, std::optional<double> lambda0);

}  // namespace hkest
