#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "chronodil/errors.hpp"

namespace chronodil::quadrature {

struct SimpsonResult {
  double value;
  double last_change;
  std::size_t intervals;
};

// Composite Simpson on [a, b], doubling the interval count from n0 until two
// successive estimates differ by less than tol.
template <class F>
SimpsonResult simpson_refined(F&& f, double a, double b, std::size_t n0, double tol,
                              int max_doublings = 16) {
  if (a == b) return {0.0, 0.0, 0};
  std::size_t n = std::max<std::size_t>(2, n0 + (n0 % 2));
  const auto rule = [&](std::size_t m) {
    const double h = (b - a) / static_cast<double>(m);
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i < m; ++i) {
      const double v = f(a + h * static_cast<double>(i));
      (i % 2 ? odd : even) += v;
    }
    return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
  };
  double prev = rule(n);
  for (int k = 0; k < max_doublings; ++k) {
    n *= 2;
    const double next = rule(n);
    const double change = std::abs(next - prev);
    if (change < tol) return {next, change, n};
    prev = next;
  }
  throw NumericalError("simpson_refined: tolerance not reached");
}

// Adaptive Gauss-Kronrod (61 points) on [a, b].
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-13, unsigned max_depth = 20,
                 double* error = nullptr) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, max_depth, rel_tol, &err);
  if (error) *error = err;
  return v;
}

// As integrate, but the tolerance is relative to the integral of |f| rather
// than to the result, so integrands that cancel to ~0 do not exhaust the depth.
template <class F>
double integrate_l1(F&& f, double a, double b, double rel_tol = 1e-13, unsigned max_depth = 20) {
  if (a == b) return 0.0;
  double l1 = 0.0;
  boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 0, rel_tol, nullptr, &l1);
  if (!(l1 > 0.0)) return 0.0;
  const double shift = l1 / (b - a);
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double x) { return f(x) + shift; }, a, b, max_depth, rel_tol);
  return v - l1;
}

}  // namespace chronodil::quadrature
