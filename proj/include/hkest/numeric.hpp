#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hkest {

// n points from a to b (inclusive), equally spaced in log r.
std::vector<double> geometric_grid(double a, double b, int n);
std::vector<double> linear_grid(double a, double b, int n);

// Left-most point of [lo, hi] where a monotone predicate (false ... true)
// becomes true, bisected until the bracket cannot shrink in double precision.
// Returns hi when pred(hi) is the first true value seen.
double bisect_first_true(const std::function<bool(double)>& pred, double lo, double hi);

enum class SeriesVerdict { Convergent, Divergent };

// Classification of a sequence of partial sums sampled along shell doublings.
struct SeriesTrend {
  SeriesVerdict verdict = SeriesVerdict::Divergent;
  double limit = 0.0;            // extrapolated value when convergent
  double last_increment = 0.0;
  double increment_ratio = 0.0;  // largest |d_{k+1}/d_k| over the window
  std::string rule;              // which test decided
};

struct SeriesRule {
  int window = 4;            // number of trailing increments inspected
  double rel_tol = 1e-3;     // stabilization threshold relative to the partial sum
  double max_ratio = 0.95;   // geometric decay needed for the increments
};

SeriesTrend classify_partial_sums(std::span<const double> partials, const SeriesRule& rule = {});

std::string to_string(SeriesVerdict v);

}  // namespace hkest
