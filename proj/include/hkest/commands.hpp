#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hkest/bounds.hpp"
#include "hkest/conditions.hpp"
#include "hkest/feynman_kac.hpp"
#include "hkest/free_process.hpp"
#include "hkest/oracle.hpp"
#include "hkest/run_config.hpp"
#include "hkest/thresholds.hpp"

namespace hkest {

struct NamedCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CheckResult {
  GrowthReport growth;
  DjpReport djp;
  DjpCriterion criterion = DjpCriterion::Unknown;
  ConstantsPack pack;
  std::optional<A2aFit> density_upper;
  std::optional<LowerFit> density_lower;
  std::optional<double> density_near_sup;
  std::vector<NamedCheck> checks;  // in evaluation order
  std::string first_failure;       // empty when everything passed
  bool pass = false;
};

CheckResult run_check(const RunConfig& cfg);

struct WindowRow {
  double t = 0.0;
  double tau = 0.0;     // t / K2
  double radius = 0.0;  // Lambda^{-1}(t/K2); +inf in the aIUC regime
};

struct ClassifyResult {
  RegimeClass regime;
  ConstantsPack pack;
  std::optional<std::string> closed_form;
  std::vector<std::pair<double, double>> lambda_table;  // (r, Lambda(r))
  std::vector<WindowRow> windows;
  std::string headline;  // "aIUC; window = inf" and the like
};

ClassifyResult run_classify(const RunConfig& cfg);

struct BoundsRow {
  double t = 0.0, x = 0.0, y = 0.0;
  std::string region;  // to_string(Region) or "uncovered"
  double lower = 0.0, upper = 0.0;
  std::string result_id;
};

std::vector<BoundsRow> run_bounds(const RunConfig& cfg);

struct RefinementCheck {
  std::string label;  // "grid-2N" or "box-M+10"
  double lambda0 = 0.0;
  double C_hat = 0.0;
  double band = 0.0;
  double drift_lambda0 = 0.0;
  double drift_C_hat = 0.0;
  double drift_band = 0.0;
  bool pass = false;
};

struct McCheck {
  McEstimate estimate;
  double oracle = 0.0;
  double z = 0.0;  // |mc - oracle| / std_error
  bool pass = false;
};

struct VerifyResult {
  bool grid_valid = false;
  std::string grid_error;
  double lambda0 = 0.0;
  double gap = 0.0;
  std::vector<double> eigenvalues;
  RegimeClass regime;
  ConstantsPack pack;
  EigProfileReport eig;
  std::vector<VerificationReport> envelopes;
  std::optional<DiagonalDrift> beyond_window;
  std::vector<SpectralFunctions> spectral;
  std::vector<RefinementCheck> refinements;
  std::vector<McCheck> mc;
  std::vector<NamedCheck> flags;
  std::vector<std::string> notes;
  bool pass = false;
};

VerifyResult run_verify(const RunConfig& cfg);

std::vector<McEstimate> run_mc(const RunConfig& cfg, std::vector<ConvergenceRow>* study = nullptr);

// Writers; every file goes through these so identical inputs give identical bytes.
std::string check_report_yaml(const RunConfig& cfg, const CheckResult& r);
std::string classify_report_yaml(const RunConfig& cfg, const ClassifyResult& r);
std::string bounds_csv(const std::vector<BoundsRow>& rows);
std::string verify_report_yaml(const RunConfig& cfg, const VerifyResult& r);
std::string spectrum_csv(const std::vector<double>& eigenvalues);
std::string ratios_csv(const VerifyResult& r);
std::string eig_profile_csv(const EigProfileReport& r);
std::string mc_csv(const std::vector<McEstimate>& rows, const std::vector<ConvergenceRow>& study);

// Each command writes into `out` and returns the process exit code.
int cmd_check(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_classify(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_bounds(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_verify(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_mc(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_report(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

// hkest <command> --config PATH [--out DIR] [--seed INT] [--threads INT]
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hkest
