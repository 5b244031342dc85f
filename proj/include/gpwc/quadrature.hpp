#pragma once

#include <cmath>
#include <functional>

namespace gpwc {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double fa, double m, double fm, double b, double fb,
                    double whole, double eps, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps || !std::isfinite(delta))
    return left + right + delta / 15.0;
  return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * eps, depth - 1) +
         simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace detail

// Adaptive Simpson with Richardson correction; eps is the absolute error
// budget, halved on each split.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double eps, int max_depth = 50) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, m, fm, b, fb, whole, eps, max_depth);
}

// Five-point Gauss-Legendre on [a, b].
template <class F>
double gauss_legendre5(const F& f, double a, double b) {
  static constexpr double x[5] = {0.0, -0.5384693101056830910, 0.5384693101056830910,
                                  -0.9061798459386639928, 0.9061798459386639928};
  static constexpr double w[5] = {0.5688888888888888889, 0.4786286704993664680,
                                  0.4786286704993664680, 0.2369268850561890875,
                                  0.2369268850561890875};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) acc += w[i] * f(c + h * x[i]);
  return h * acc;
}

}  // namespace gpwc
