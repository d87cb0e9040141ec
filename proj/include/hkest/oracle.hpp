#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hkest/free_process.hpp"
#include "hkest/numeric.hpp"
#include "hkest/profiles.hpp"

namespace hkest {

enum class SmallJumpPolicy { Diffusion, Truncate };

// Interior grid x_i = -M + i*delta, i = 1..N-1, delta = 2M/N. The process is
// killed when it leaves [-M, M].
struct Discretization {
  double half_width = 40.0;
  int points = 2048;
  SmallJumpPolicy small_jumps = SmallJumpPolicy::Diffusion;

  double delta() const { return 2.0 * half_width / points; }
  int size() const { return points - 1; }
  double x(int i) const { return -half_width + (i + 1) * delta(); }
  // Throws PreconditionError unless N >= 64 and delta <= 1/4.
  void validate() const;
};

// Potential evaluated at a grid point x (not |x|).
using GridPotential = std::function<double(double)>;

GridPotential as_grid_potential(const PotentialProfile& V);

// Off-diagonal -nu-mass of the cell around x_i - x_j; diagonal holds the total
// jump rate above delta/2 (in-box jumps plus killed ones), the small-jump
// diffusion and V.
Eigen::MatrixXd build_matrix(const Discretization& disc, const LevySymbol& sym, const GridPotential& V);

struct Spectrum {
  Discretization disc;
  std::vector<double> xs;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // column k holds phi_k(x_i), delta * sum phi_k^2 = 1
  Eigen::VectorXd masses;        // delta * sum_i phi_k(x_i)
  bool ground_state_positive = false;
  bool partial = false;

  double delta() const { return disc.delta(); }
  double lambda0() const { return eigenvalues(0); }
  double phi0(int i) const { return eigenvectors(i, 0); }
  int size() const { return static_cast<int>(xs.size()); }
  // Grid index closest to x.
  int nearest(double x) const;
};

// Dense LAPACK eigensolve up to 4096 unknowns, the lowest 256 pairs above.
// Throws NumericalFailure when phi_0 is not strictly positive or lambda_0 is
// not simple.
Spectrum eigensolve(const Eigen::MatrixXd& H, const Discretization& disc);

Spectrum build_oracle(const Discretization& disc, const LevySymbol& sym, const GridPotential& V);

// max |delta Phi^T Phi - I|
double orthonormality_residual(const Spectrum& spec);

// Number of modes with e^{-(lambda_k - lambda_0) t} >= 1e-14.
int active_modes(const Spectrum& spec, double t);

double heat_kernel(const Spectrum& spec, double t, int i, int j);
// u_t on rows x cols index sets.
Eigen::MatrixXd heat_kernel_block(const Spectrum& spec, double t, std::span<const int> rows,
                                  std::span<const int> cols);
// sum_j u_t(x_i, x_j) delta for every i: the oracle's U_t 1.
Eigen::VectorXd row_sums(const Spectrum& spec, double t);

struct RatioSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double kernel = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double ratio = 0.0;  // u / sqrt(lower * upper)
};

struct VerificationReport {
  std::string region;
  std::vector<RatioSample> samples;
  std::vector<double> times;
  std::vector<double> C_hat_per_t;
  double C_hat = 0.0;            // max(sup u/upper, sup lower/u), >= 1
  double t_drift_last = 0.0;     // relative change of C_hat between the two largest t
  double t_drift_all = 0.0;      // (max - min)/min of C_hat over all t
  double refinement_drift = 0.0; // filled in by callers that rerun on a refined grid
  bool refinement_checked = false;
  bool pass = false;
  std::vector<std::string> notes;
};

// phi_0 g / f on R0+1 <= |x| <= min(r_max, M-5); pass when max/min < band.
// The core |x| < R0 is reported separately as the range of phi_0 there.
struct EigProfileReport {
  std::vector<double> xs;
  std::vector<double> ratios;
  double band = 0.0;  // max/min of ratios
  double band_limit = 50.0;
  double core_min = 0.0, core_max = 0.0;
  bool pass = false;
};

EigProfileReport verify_eig_profile(const Spectrum& spec, const JumpProfile& f, const PotentialProfile& g,
                                    double r_max, double band_limit = 50.0);

struct ShapePair {
  double lower = 0.0;
  double upper = 0.0;
};
using ShapeFn = std::function<ShapePair(double t, double x, double y)>;
using RegionSelector = std::function<bool(double t, double x, double y)>;

struct EnvelopeCheckOptions {
  double t_b = 1.0;
  int threads = 1;
  double drift_limit = 0.25;
  bool keep_samples = true;
};

// Ratios of the oracle kernel to a shape pair over the (t, x, y) product grid
// restricted by `inside`; points are snapped to the grid. Throws DomainError
// when some t <= 30 t_b or the selector leaves no points.
VerificationReport verify_envelope(const Spectrum& spec, const ShapeFn& shape, std::span<const double> t_list,
                                   std::span<const double> points, const RegionSelector& inside,
                                   const std::string& label, const EnvelopeCheckOptions& opt = {});

// u_t(x, x) / (e^{-lambda0 t} phi_0(x)^2) along |x| = |y| on a geometric radius grid.
struct DiagonalDrift {
  double t = 0.0;
  std::vector<double> radii;
  std::vector<double> ratios;
  bool monotone = false;
  double fold = 1.0;  // max/min of the ratios
  bool pass = false;  // monotone and fold >= min_fold
};

DiagonalDrift diagonal_drift(const Spectrum& spec, double t, double r_from, double r_to, int samples = 12,
                             double min_fold = 3.0);

// Ground-state shape built from the oracle itself: e^{-lambda0 t} phi_0(x) phi_0(y).
ShapeFn oracle_ground_state_shape(const Spectrum& spec);

struct SpectralFunctions {
  double t = 0.0;
  double trace = 0.0;
  double hilbert_schmidt = 0.0;
  double heat_content = 0.0;
};

SpectralFunctions spectral_functions(const Spectrum& spec, double t);

// Shell partial integrals of int_{|x| > R0} e^{-s V(x)} dx in d = 1, over
// R = R0 2^k up to log R = 690, classified by the shared series rule.
struct ExpIntReport {
  double s = 0.0;
  std::vector<double> radii;
  std::vector<double> partials;
  SeriesTrend trend;
  bool convergent() const { return trend.verdict == SeriesVerdict::Convergent; }
};

ExpIntReport exp_integral_condition(const PotentialProfile& V, double s, double R0);

// Heat trace at t on the box M and on M + extra (same delta).
struct TraceStudy {
  double t = 0.0;
  double M = 0.0;
  double M_extended = 0.0;
  double trace = 0.0;
  double trace_extended = 0.0;
  double relative_change = 0.0;
  double threshold = 0.02;
  bool stable = false;
};

TraceStudy trace_box_study(const Discretization& disc, const LevySymbol& sym, const GridPotential& V, double t,
                           double extra = 10.0, double threshold = 0.02);

// Same delta, half width M + extra.
Discretization extend_box(const Discretization& disc, double extra);

std::string to_string(SmallJumpPolicy p);

}  // namespace hkest
