#include "hkest/oracle.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "hkest/error.hpp"
#include "hkest/quadrature.hpp"

namespace hkest {

namespace {

constexpr int kDenseLimit = 4096;
constexpr int kPartialModes = 256;

// Runs body(begin, end) over [0, n) split into contiguous blocks.
template <class Body>
void parallel_blocks(int n, int threads, Body body) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + threads - 1) / threads;
  for (int b = 0; b < n; b += chunk) pool.emplace_back(body, b, std::min(n, b + chunk));
  for (auto& th : pool) th.join();
}

}  // namespace

void Discretization::validate() const {
  if (!(half_width > 0.0)) throw PreconditionError("discretization: half width must be > 0");
  if (points < 64) throw PreconditionError("discretization: need N >= 64, got " + std::to_string(points));
  if (delta() > 0.25)
    throw PreconditionError("discretization: spacing 2M/N = " + std::to_string(delta()) + " exceeds 1/4");
}

GridPotential as_grid_potential(const PotentialProfile& V) {
  return [V](double x) { return V(std::abs(x)); };
}

Eigen::MatrixXd build_matrix(const Discretization& disc, const LevySymbol& sym, const GridPotential& V) {
  disc.validate();
  const int n = disc.size();
  const double D = disc.delta();
  const JumpProfile& f = sym.profile();
  const double s0 = sym.sigma0();

  std::vector<double> tails(n + 1);
  for (int k = 0; k <= n; ++k) tails[k] = f.tail_mass((k + 0.5) * D);
  std::vector<double> w(n, 0.0);
  for (int k = 1; k < n; ++k) w[k] = s0 * (tails[k - 1] - tails[k]);

  double a = sym.diffusion();
  if (disc.small_jumps == SmallJumpPolicy::Diffusion) a += s0 * f.second_moment(0.5 * D);
  const double leave = 2.0 * s0 * tails[0];
  if (!std::isfinite(leave) || !std::isfinite(a))
    throw NumericalFailure("jump intensity above half a cell is not finite");
  const double nb = a / (D * D);

  Eigen::MatrixXd H(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) H(i, j) = -w[std::abs(i - j)];
  }
  for (int i = 0; i < n; ++i) {
    H(i, i) = leave + 2.0 * nb + V(disc.x(i));
    if (i + 1 < n) {
      H(i, i + 1) -= nb;
      H(i + 1, i) -= nb;
    }
  }
  return H;
}

int Spectrum::nearest(double x) const {
  const long i = std::lround((x + disc.half_width) / disc.delta()) - 1;
  return static_cast<int>(std::clamp<long>(i, 0, static_cast<long>(xs.size()) - 1));
}

Spectrum eigensolve(const Eigen::MatrixXd& H, const Discretization& disc) {
  const int n = static_cast<int>(H.rows());
  if (H.cols() != n || n != disc.size()) throw PreconditionError("eigensolve: matrix does not match the grid");
  Spectrum spec;
  spec.disc = disc;
  spec.xs.resize(n);
  for (int i = 0; i < n; ++i) spec.xs[i] = disc.x(i);

  Eigen::MatrixXd A = H;  // column-major copy, overwritten by LAPACK
  int info = 0;
  if (n <= kDenseLimit) {
    spec.eigenvalues.resize(n);
    info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, A.data(), n, spec.eigenvalues.data());
    spec.eigenvectors = std::move(A);
  } else {
    spec.partial = true;
    const int m_req = kPartialModes;
    lapack_int m = 0;
    Eigen::VectorXd w(n);
    Eigen::MatrixXd Z(n, m_req);
    std::vector<lapack_int> support(2 * m_req);
    info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, A.data(), n, 0.0, 0.0, 1, m_req, 0.0, &m, w.data(),
                          Z.data(), n, support.data());
    spec.eigenvalues = w.head(m);
    spec.eigenvectors = Z.leftCols(m);
  }
  if (info != 0) throw NumericalFailure("LAPACK eigensolver failed with info = " + std::to_string(info));

  const double D = disc.delta();
  spec.eigenvectors /= std::sqrt(D);
  // Fix every sign so that the mass is nonnegative; phi_0 must then be positive.
  for (int k = 0; k < spec.eigenvectors.cols(); ++k) {
    if (spec.eigenvectors.col(k).sum() < 0.0) spec.eigenvectors.col(k) *= -1.0;
  }
  spec.masses = D * spec.eigenvectors.colwise().sum().transpose();

  const auto phi0 = spec.eigenvectors.col(0);
  const double top = phi0.cwiseAbs().maxCoeff();
  const double low = phi0.minCoeff();
  // Entries at roundoff level relative to the peak carry no sign information.
  const double noise = 1e-12 * top;
  if (low < -noise)
    throw NumericalFailure("ground state changes sign (min phi_0 = " + std::to_string(low) +
                           "); the discretized operator is not positivity preserving");
  spec.ground_state_positive = low > 0.0;
  if (spec.eigenvalues.size() < 2 || !(spec.eigenvalues(1) - spec.eigenvalues(0) > 1e-12 * std::abs(spec.eigenvalues(0))))
    throw NumericalFailure("lowest eigenvalue is not simple");
  return spec;
}

Spectrum build_oracle(const Discretization& disc, const LevySymbol& sym, const GridPotential& V) {
  return eigensolve(build_matrix(disc, sym, V), disc);
}

double orthonormality_residual(const Spectrum& spec) {
  const Eigen::MatrixXd G = spec.delta() * (spec.eigenvectors.transpose() * spec.eigenvectors);
  return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

int active_modes(const Spectrum& spec, double t) {
  const double cut = -std::log(1e-14);
  const int m = static_cast<int>(spec.eigenvalues.size());
  int k = 1;
  while (k < m && (spec.eigenvalues(k) - spec.eigenvalues(0)) * t <= cut) ++k;
  return k;
}

double heat_kernel(const Spectrum& spec, double t, int i, int j) {
  if (!(t > 0.0)) throw DomainError("heat kernel needs t > 0");
  const int m = active_modes(spec, t);
  double s = 0.0;
  for (int k = 0; k < m; ++k)
    s += std::exp(-spec.eigenvalues(k) * t) * spec.eigenvectors(i, k) * spec.eigenvectors(j, k);
  return s;
}

Eigen::MatrixXd heat_kernel_block(const Spectrum& spec, double t, std::span<const int> rows,
                                  std::span<const int> cols) {
  if (!(t > 0.0)) throw DomainError("heat kernel needs t > 0");
  const int m = active_modes(spec, t);
  Eigen::MatrixXd R(rows.size(), m), C(cols.size(), m);
  for (int k = 0; k < m; ++k) {
    const double e = std::exp(-spec.eigenvalues(k) * t);
    for (std::size_t a = 0; a < rows.size(); ++a) R(a, k) = e * spec.eigenvectors(rows[a], k);
    for (std::size_t b = 0; b < cols.size(); ++b) C(b, k) = spec.eigenvectors(cols[b], k);
  }
  return R * C.transpose();
}

Eigen::VectorXd row_sums(const Spectrum& spec, double t) {
  const int m = active_modes(spec, t);
  Eigen::VectorXd coef(m);
  for (int k = 0; k < m; ++k) coef(k) = std::exp(-spec.eigenvalues(k) * t) * spec.masses(k);
  return spec.eigenvectors.leftCols(m) * coef;
}

EigProfileReport verify_eig_profile(const Spectrum& spec, const JumpProfile& f, const PotentialProfile& g,
                                    double r_max, double band_limit) {
  EigProfileReport rep;
  rep.band_limit = band_limit;
  const double lo = g.R0() + 1.0;
  const double hi = std::min(r_max, spec.disc.half_width - 5.0);
  if (!(hi > lo)) throw DomainError("eigenfunction profile window [R0+1, M-5] is empty");
  rep.core_min = std::numeric_limits<double>::infinity();
  rep.core_max = 0.0;
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (int i = 0; i < spec.size(); ++i) {
    const double r = std::abs(spec.xs[i]);
    const double p = spec.phi0(i);
    if (r < g.R0()) {
      rep.core_min = std::min(rep.core_min, p);
      rep.core_max = std::max(rep.core_max, p);
    }
    if (r < lo || r > hi) continue;
    const double ratio = p * g(r) / f.value(r);
    rep.xs.push_back(spec.xs[i]);
    rep.ratios.push_back(ratio);
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
  }
  rep.band = rmin > 0.0 ? rmax / rmin : std::numeric_limits<double>::infinity();
  rep.pass = std::isfinite(rep.band) && rep.band < band_limit;
  return rep;
}

VerificationReport verify_envelope(const Spectrum& spec, const ShapeFn& shape, std::span<const double> t_list,
                                   std::span<const double> points, const RegionSelector& inside,
                                   const std::string& label, const EnvelopeCheckOptions& opt) {
  if (t_list.empty()) throw PreconditionError("verify_envelope: empty time list");
  for (double t : t_list) {
    if (!(t > 30.0 * opt.t_b))
      throw DomainError("verify_envelope: t = " + std::to_string(t) + " is not above 30 t_b = " +
                        std::to_string(30.0 * opt.t_b));
  }
  std::vector<int> idx;
  for (double p : points) idx.push_back(spec.nearest(p));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  const int n = static_cast<int>(idx.size());

  VerificationReport rep;
  rep.region = label;
  std::size_t counted = 0;
  for (double t : t_list) {
    const Eigen::MatrixXd U = heat_kernel_block(spec, t, idx, idx);
    std::vector<double> row_worst(n, 0.0);
    std::vector<std::size_t> row_count(n, 0);
    std::vector<std::vector<RatioSample>> row_samples(opt.keep_samples ? n : 0);
    parallel_blocks(n, opt.threads, [&](int b, int e) {
      for (int a = b; a < e; ++a) {
        const double x = spec.xs[idx[a]];
        for (int c = 0; c < n; ++c) {
          const double y = spec.xs[idx[c]];
          if (!inside(t, x, y)) continue;
          const ShapePair sp = shape(t, x, y);
          const double u = U(a, c);
          double worst = std::numeric_limits<double>::infinity();
          if (u > 0.0 && sp.upper > 0.0) worst = std::max(u / sp.upper, sp.lower / u);
          row_worst[a] = std::max(row_worst[a], worst);
          ++row_count[a];
          if (opt.keep_samples)
            row_samples[a].push_back({t, x, y, u, sp.lower, sp.upper, u / std::sqrt(sp.lower * sp.upper)});
        }
      }
    });
    double worst = 0.0;
    std::size_t here = 0;
    for (int a = 0; a < n; ++a) {
      worst = std::max(worst, row_worst[a]);
      here += row_count[a];
      if (opt.keep_samples) rep.samples.insert(rep.samples.end(), row_samples[a].begin(), row_samples[a].end());
    }
    // Times at which the region is empty drop out of the comparison.
    if (here == 0) continue;
    counted += here;
    rep.times.push_back(t);
    rep.C_hat_per_t.push_back(worst);
  }
  if (counted == 0) throw DomainError("verify_envelope: region '" + label + "' selects no grid points");

  rep.C_hat = *std::max_element(rep.C_hat_per_t.begin(), rep.C_hat_per_t.end());
  const auto [mn, mx] = std::minmax_element(rep.C_hat_per_t.begin(), rep.C_hat_per_t.end());
  rep.t_drift_all = (*mx - *mn) / *mn;
  // Largest two times, whatever order the list came in.
  std::vector<std::size_t> order(rep.times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rep.times[a] < rep.times[b]; });
  if (order.size() >= 2) {
    const double a = rep.C_hat_per_t[order[order.size() - 2]];
    const double b = rep.C_hat_per_t[order.back()];
    rep.t_drift_last = std::abs(b - a) / std::min(a, b);
  }
  rep.pass = std::isfinite(rep.C_hat) && rep.t_drift_all < opt.drift_limit;
  if (!std::isfinite(rep.C_hat)) rep.notes.push_back("kernel or shape vanished at a sampled point");
  return rep;
}

DiagonalDrift diagonal_drift(const Spectrum& spec, double t, double r_from, double r_to, int samples,
                             double min_fold) {
  DiagonalDrift d;
  d.t = t;
  r_to = std::min(r_to, spec.disc.half_width - 5.0);
  if (!(r_to > r_from) || !(r_from > 0.0)) throw DomainError("diagonal_drift: empty radius range");
  std::vector<int> idx;
  for (double r : geometric_grid(r_from, r_to, samples)) {
    const int i = spec.nearest(r);
    if (idx.empty() || idx.back() != i) idx.push_back(i);
  }
  const double ground = std::exp(-spec.lambda0() * t);
  for (int i : idx) {
    d.radii.push_back(spec.xs[i]);
    d.ratios.push_back(heat_kernel(spec, t, i, i) / (ground * spec.phi0(i) * spec.phi0(i)));
  }
  bool up = true, down = true;
  for (std::size_t k = 1; k < d.ratios.size(); ++k) {
    if (!(d.ratios[k] > d.ratios[k - 1])) up = false;
    if (!(d.ratios[k] < d.ratios[k - 1])) down = false;
  }
  d.monotone = d.ratios.size() >= 2 && (up || down);
  const auto [mn, mx] = std::minmax_element(d.ratios.begin(), d.ratios.end());
  d.fold = *mx / *mn;
  d.pass = d.monotone && d.fold >= min_fold;
  return d;
}

ShapeFn oracle_ground_state_shape(const Spectrum& spec) {
  return [&spec](double t, double x, double y) {
    const double v = std::exp(-spec.lambda0() * t) * spec.phi0(spec.nearest(x)) * spec.phi0(spec.nearest(y));
    return ShapePair{v, v};
  };
}

SpectralFunctions spectral_functions(const Spectrum& spec, double t) {
  if (!(t > 0.0)) throw DomainError("spectral functions need t > 0");
  SpectralFunctions s;
  s.t = t;
  for (int k = 0; k < spec.eigenvalues.size(); ++k) {
    const double e = std::exp(-spec.eigenvalues(k) * t);
    s.trace += e;
    s.hilbert_schmidt += e * e;
    s.heat_content += e * spec.masses(k) * spec.masses(k);
  }
  return s;
}

ExpIntReport exp_integral_condition(const PotentialProfile& V, double s, double R0) {
  if (!(R0 > 0.0)) throw PreconditionError("exp_integral_condition: R0 must be > 0");
  ExpIntReport rep;
  rep.s = s;
  QuadratureSettings q;
  q.abs_tol = 0.0;
  q.rel_tol = 1e-10;
  double lo = R0, total = 0.0;
  // e^{690} is still a finite double; beyond that partial sums may overflow.
  while (std::log(2.0 * lo) <= 690.0) {
    const double hi = 2.0 * lo;
    total += 2.0 * integrate_log_scale([&](double r) { return std::exp(-s * V(r)); }, lo, hi, q).value;
    rep.radii.push_back(hi);
    rep.partials.push_back(total);
    lo = hi;
  }
  rep.trend = classify_partial_sums(rep.partials);
  return rep;
}

Discretization extend_box(const Discretization& disc, double extra) {
  Discretization out = disc;
  out.half_width = disc.half_width + extra;
  out.points = static_cast<int>(std::lround(2.0 * out.half_width / disc.delta()));
  return out;
}

TraceStudy trace_box_study(const Discretization& disc, const LevySymbol& sym, const GridPotential& V, double t,
                           double extra, double threshold) {
  TraceStudy st;
  st.t = t;
  st.threshold = threshold;
  const Discretization big = extend_box(disc, extra);
  st.M = disc.half_width;
  st.M_extended = big.half_width;
  st.trace = spectral_functions(build_oracle(disc, sym, V), t).trace;
  st.trace_extended = spectral_functions(build_oracle(big, sym, V), t).trace;
  st.relative_change = std::abs(st.trace_extended - st.trace) / st.trace;
  st.stable = st.relative_change < threshold;
  return st;
}

std::string to_string(SmallJumpPolicy p) { return p == SmallJumpPolicy::Diffusion ? "diffusion" : "truncate"; }

}  // namespace hkest
