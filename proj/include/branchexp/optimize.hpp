#ifndef BRANCHEXP_OPTIMIZE_HPP
#define BRANCHEXP_OPTIMIZE_HPP

#include <cmath>
#include <limits>
#include <numbers>

#include "branchexp/error.hpp"

namespace branchexp {

struct ScalarOptimum {
  double x;
  double value;
  int evaluations;
};

/// Golden-section search for the maximum of a unimodal f on [lo, hi].
///
/// f may return -infinity on a leading segment of the interval (values
/// outside its effective domain); ties at -infinity move the bracket right.
template <class F>
ScalarOptimum golden_section_maximize(F&& f, double lo, double hi, double tol,
                                      int max_iter = 400) {
  constexpr double kInvPhi = 0.6180339887498948482;  // 1 / golden ratio
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;
  const double ninf = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
    const bool move_right = fc < fd || (fc == ninf && fd == ninf);
    if (move_right) {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = f(d);
    } else {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = f(c);
    }
    ++evals;
  }
  if (fc >= fd) return {c, fc, evals};
  return {d, fd, evals};
}

template <class F>
ScalarOptimum golden_section_minimize(F&& f, double lo, double hi, double tol,
                                      int max_iter = 400) {
  auto r = golden_section_maximize([&](double x) { return -f(x); }, lo, hi, tol, max_iter);
  r.value = -r.value;
  return r;
}

/// Bisection for a sign change of f on [lo, hi]. Returns the midpoint of the
/// final bracket, whose width is below tol.
template <class F>
double bisect_root(F&& f, double lo, double hi, double tol, int max_iter = 400) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw BracketingFailure("no sign change on [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  }
  for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace branchexp

#endif  // BRANCHEXP_OPTIMIZE_HPP
