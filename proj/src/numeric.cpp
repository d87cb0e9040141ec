#include "hkest/numeric.hpp"

#include <limits>
#include <algorithm>
#include <cmath>

#include "hkest/error.hpp"

namespace hkest {

std::vector<double> geometric_grid(double a, double b, int n) {
  if (!(a > 0.0) || !(b > a) || n < 2) throw PreconditionError("geometric_grid needs 0 < a < b and n >= 2");
  std::vector<double> out(n);
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i) out[i] = std::exp(la + (lb - la) * i / (n - 1));
  out.front() = a;
  out.back() = b;
  return out;
}

std::vector<double> linear_grid(double a, double b, int n) {
  if (!(b > a) || n < 2) throw PreconditionError("linear_grid needs a < b and n >= 2");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  out.back() = b;
  return out;
}

double bisect_first_true(const std::function<bool(double)>& pred, double lo, double hi) {
  if (pred(lo)) return lo;
  for (int it = 0; it < 4000; ++it) {
    // Geometric midpoint while the bracket spans decades, arithmetic afterwards.
    const double mid = (lo > 0.0 && hi > 4.0 * lo) ? std::sqrt(lo * hi) : lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) break;
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

SeriesTrend classify_partial_sums(std::span<const double> partials, const SeriesRule& rule) {
  SeriesTrend out;
  const int w = rule.window;
  if (static_cast<int>(partials.size()) < w + 1) {
    out.rule = "too few samples";
    return out;
  }
  for (double p : partials) {
    if (!std::isfinite(p)) {
      out.rule = "non-finite partial sum";
      return out;
    }
  }
  std::vector<double> d(w);
  const std::size_t base = partials.size() - w - 1;
  for (int i = 0; i < w; ++i) d[i] = partials[base + i + 1] - partials[base + i];
  const double last = partials.back();
  out.last_increment = d.back();

  double worst_ratio = 0.0;
  bool shrinking = true;
  for (int i = 1; i < w; ++i) {
    const double ratio = d[i - 1] != 0.0 ? std::abs(d[i] / d[i - 1]) : (d[i] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    worst_ratio = std::max(worst_ratio, ratio);
    if (ratio > rule.max_ratio) shrinking = false;
  }
  out.increment_ratio = worst_ratio;

  const bool all_nonpositive = std::all_of(d.begin(), d.end(), [](double v) { return v <= 0.0; });
  const bool all_positive = std::all_of(d.begin(), d.end(), [](double v) { return v > 0.0; });
  const double scale = std::max(std::abs(last), 1e-300);

  if (all_nonpositive) {
    out.verdict = SeriesVerdict::Convergent;
    out.limit = last;
    out.rule = "non-increasing";
    return out;
  }
  if (std::abs(d.back()) <= rule.rel_tol * scale && worst_ratio <= 1.0) {
    out.verdict = SeriesVerdict::Convergent;
    out.limit = last;
    out.rule = "stabilized";
    return out;
  }
  if (shrinking) {
    out.verdict = SeriesVerdict::Convergent;
    // Geometric extrapolation of the remaining increments.
    out.limit = all_positive ? last + d.back() * worst_ratio / (1.0 - worst_ratio) : last;
    out.rule = "geometric decay";
    return out;
  }
  out.verdict = SeriesVerdict::Divergent;
  out.limit = std::numeric_limits<double>::infinity();
  out.rule = "no stabilization";
  return out;
}

std::string to_string(SeriesVerdict v) { return v == SeriesVerdict::Convergent ? "convergent" : "divergent"; }

}  // namespace hkest
