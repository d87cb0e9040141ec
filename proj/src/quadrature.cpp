#include "hkest/quadrature.hpp"

#include <limits>
#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "hkest/error.hpp"

namespace hkest {

namespace {

constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};

constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077808479795980, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Gauss weights belonging to kXgk[1], kXgk[3], ..., kXgk[9].
constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651146};

struct Piece {
  double a, b, value, error;
  // Ties resolved by position so that the refinement order is reproducible.
  bool operator<(const Piece& o) const {
    if (error != o.error) return error < o.error;
    return a > o.a;
  }
};

Piece gauss_kronrod(const Integrand& fn, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = fn(c);
  double kronrod = kWgk[10] * fc;
  double gauss = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double dx = h * kXgk[i];
    const double pair = fn(c - dx) + fn(c + dx);
    kronrod += kWgk[i] * pair;
    if (i % 2 == 1) gauss += kWg[i / 2] * pair;
  }
  kronrod *= h;
  gauss *= h;
  double err = std::abs(kronrod - gauss);
  if (!std::isfinite(kronrod)) err = std::numeric_limits<double>::infinity();
  return {a, b, kronrod, err};
}

}  // namespace

void QuadratureSettings::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw PreconditionError("quadrature tolerances must be positive");
  if (max_refinement_depth < 1) throw PreconditionError("max_refinement_depth must be >= 1");
  if (dimension != 1 && dimension != 2) throw PreconditionError("dimension must be 1 or 2");
  if (angular_points < 8) throw PreconditionError("angular_points must be >= 8");
}

QuadResult& QuadResult::operator+=(const QuadResult& other) {
  value += other.value;
  error += other.error;
  converged = converged && other.converged;
  intervals += other.intervals;
  return *this;
}

QuadResult integrate(const Integrand& fn, std::span<const double> breakpoints,
                     const QuadratureSettings& q) {
  QuadResult out;
  if (breakpoints.size() < 2) return out;
  std::priority_queue<Piece> heap;
  double value = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    Piece p = gauss_kronrod(fn, breakpoints[i], breakpoints[i + 1]);
    value += p.value;
    error += p.error;
    heap.push(p);
  }
  int count = static_cast<int>(heap.size());
  while (!heap.empty() && error > std::max(q.abs_tol, q.rel_tol * std::abs(value))) {
    if (count >= q.max_refinement_depth) {
      out.converged = false;
      break;
    }
    Piece worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval cannot be split further in double precision.
      out.converged = false;
      break;
    }
    heap.pop();
    Piece left = gauss_kronrod(fn, worst.a, mid);
    Piece right = gauss_kronrod(fn, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum from the pieces to avoid drift from the running updates.
  value = 0.0;
  error = 0.0;
  std::vector<Piece> pieces;
  pieces.reserve(heap.size());
  while (!heap.empty()) {
    pieces.push_back(heap.top());
    heap.pop();
  }
  std::sort(pieces.begin(), pieces.end(), [](const Piece& l, const Piece& r) { return l.a < r.a; });
  for (const Piece& p : pieces) {
    value += p.value;
    error += p.error;
  }
  out.value = value;
  out.error = error;
  out.intervals = count;
  if (!std::isfinite(value) || error > std::max(q.abs_tol, q.rel_tol * std::abs(value))) out.converged = false;
  return out;
}

QuadResult integrate(const Integrand& fn, double a, double b, const QuadratureSettings& q) {
  if (a == b) return {};
  if (a > b) {
    QuadResult r = integrate(fn, b, a, q);
    r.value = -r.value;
    return r;
  }
  const double pts[2] = {a, b};
  return integrate(fn, std::span<const double>(pts, 2), q);
}

QuadResult integrate_to_infinity(const Integrand& fn, double a, const QuadratureSettings& q) {
  if (a <= 0.0) {
    QuadResult head = integrate(fn, a, 1.0, q);
    head += integrate_to_infinity(fn, 1.0, q);
    return head;
  }
  // r = a/u maps [a, inf) onto (0, 1]; dr = a/u^2 du.
  auto mapped = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double r = a / u;
    const double v = fn(r);
    if (v == 0.0) return 0.0;
    return v * a / (u * u);
  };
  return integrate(mapped, 0.0, 1.0, q);
}

QuadResult integrate_log_scale(const Integrand& fn, double a, double b, const QuadratureSettings& q) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("integrate_log_scale needs positive limits");
  auto mapped = [&](double s) {
    const double r = std::exp(s);
    return fn(r) * r;
  };
  return integrate(mapped, std::log(a), std::log(b), q);
}

}  // namespace hkest
