#pragma once

#include <algorithm>
#include <cmath>

namespace recursim::detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Below 1e-13 of the estimate the difference is rounding noise; insisting
  // on the absolute target there would recurse to full depth everywhere.
  const double floor = 1e-13 * std::abs(left + right);
  if (depth <= 0 || std::abs(delta) <= 15.0 * std::max(tol, floor) || !std::isfinite(delta) ||
      !(a < lm && rm < b)) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson quadrature with Richardson correction. `tol` is the
/// absolute error target, relaxed to 1e-13 relative on pieces whose value
/// makes it unreachable in double precision; recursion stops after
/// `max_depth` halvings.
template <class F>
double adaptive_simpson(F f, double a, double b, double tol = 1e-10, int max_depth = 60) {
  if (b <= a) {
    return 0.0;
  }
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace recursim::detail
