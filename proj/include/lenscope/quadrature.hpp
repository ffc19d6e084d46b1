// SPDX-License-Identifier: Apache-2.0
//
// Globally adaptive Gauss-Kronrod quadrature on the 7/15 point pair.
// Subintervals are kept in a priority queue ordered by their error
// estimate; the worst one is bisected until the summed error estimate
// meets the requested tolerance. Node and weight constants are the
// standard double-precision G7/K15 tables.
#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "lenscope/errors.hpp"

namespace lenscope {

struct QuadratureOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
  int intervals = 1;
};

namespace detail {

// Kronrod-15 abscissae on [0, 1] endpoint side (symmetric about 0); the
// even-index entries are the embedded Gauss-7 nodes.
inline constexpr double k15_x[8] = {
    0.00000000000000000e+00, 2.07784955007898468e-01,
    4.05845151377397167e-01, 5.86087235467691130e-01,
    7.41531185599394440e-01, 8.64864423359769073e-01,
    9.49107912342758525e-01, 9.91455371120812639e-01,
};
inline constexpr double k15_w[8] = {
    2.09482141084727828e-01, 2.04432940075298892e-01,
    1.90350578064785410e-01, 1.69004726639267903e-01,
    1.40653259715525919e-01, 1.04790010322250184e-01,
    6.30920926299785533e-02, 2.29353220105292250e-02,
};
inline constexpr double g7_w[4] = {
    4.17959183673469388e-01, 3.81830050505118945e-01,
    2.79705391489276668e-01, 1.29484966168869693e-01,
};

struct Panel {
  double a, b;
  double value;
  double err;
};

template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  const double f0 = f(c);
  double k = k15_w[0] * f0;
  double g = g7_w[0] * f0;
  for (int i = 1; i < 8; ++i) {
    const double fp = f(c + hw * k15_x[i]);
    const double fm = f(c - hw * k15_x[i]);
    k += k15_w[i] * (fp + fm);
    if (i % 2 == 0) g += g7_w[i / 2] * (fp + fm);
  }
  Panel p;
  p.a = a;
  p.b = b;
  p.value = hw * k;
  p.err = std::abs(hw * (k - g));
  return p;
}

} // namespace detail

/// Integrate f over [a, b] (a > b allowed; the result is signed).
template <class F>
QuadratureResult integrate(F&& f, double a, double b,
                           const QuadratureOptions& opts = {}) {
  QuadratureResult res;
  if (a == b) return res;

  auto worse = [](const detail::Panel& l, const detail::Panel& r) {
    return l.err < r.err;
  };
  std::priority_queue<detail::Panel, std::vector<detail::Panel>,
                      decltype(worse)>
      heap(worse);

  detail::Panel whole = detail::gk15(f, a, b);
  res.evaluations = 15;
  double total = whole.value;
  double total_err = whole.err;
  heap.push(whole);

  auto target = [&] {
    return std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
  };

  while (total_err > target() &&
         static_cast<int>(heap.size()) < opts.max_intervals) {
    detail::Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid == worst.a || mid == worst.b) {
      // Interval collapsed to machine width; nothing more to resolve here.
      heap.push(worst);
      break;
    }
    detail::Panel left = detail::gk15(f, worst.a, mid);
    detail::Panel right = detail::gk15(f, mid, worst.b);
    res.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    heap.push(left);
    heap.push(right);
  }

  res.value = total;
  res.error_estimate = total_err;
  res.intervals = static_cast<int>(heap.size());
  if (total_err > target()) {
    const detail::Panel& worst = heap.top();
    throw NumericError(
        "quadrature: failed to reach tolerance " + std::to_string(target()) +
        " (error estimate " + std::to_string(total_err) +
        ", worst subinterval [" + std::to_string(worst.a) + ", " +
        std::to_string(worst.b) + "])");
  }
  return res;
}

/// Integrate with interior breakpoints (integrand kinks, spline knots).
/// Breakpoints outside (a, b) are ignored; they need not be sorted relative
/// to the integration direction.
template <class F>
QuadratureResult integrate_segmented(F&& f, double a, double b,
                                     const std::vector<double>& breakpoints,
                                     const QuadratureOptions& opts = {}) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  std::vector<double> cuts;
  cuts.push_back(lo);
  for (double c : breakpoints)
    if (c > lo && c < hi) cuts.push_back(c);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());

  QuadratureResult res;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    QuadratureResult part = integrate(f, cuts[i], cuts[i + 1], opts);
    res.value += part.value;
    res.error_estimate += part.error_estimate;
    res.evaluations += part.evaluations;
    res.intervals += part.intervals;
  }
  if (b < a) res.value = -res.value;
  return res;
}

} // namespace lenscope
