// SPDX-License-Identifier: Apache-2.0
//
// Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.
// The embedded fourth-order solution drives PI-free step control with the
// usual 0.9 safety factor. Integration direction follows the sign of
// (t_end - t_start).
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "lenscope/errors.hpp"

namespace lenscope {

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;   // absolute floor; scale to the state magnitude
  double h_init = 0.0;      // 0 picks a fraction of the interval
  long max_steps = 2000000;
};

namespace detail {

// Classical DOPRI5 tableau (rational entries, exact in double).
inline constexpr double dp_c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5,
                                   8.0 / 9, 1.0, 1.0};
inline constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
     -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
inline constexpr double dp_b5[7] = {35.0 / 384,     0.0,        500.0 / 1113,
                                    125.0 / 192,    -2187.0 / 6784,
                                    11.0 / 84,      0.0};
inline constexpr double dp_b4[7] = {5179.0 / 57600,  0.0,
                                    7571.0 / 16695,  393.0 / 640,
                                    -92097.0 / 339200, 187.0 / 2100,
                                    1.0 / 40};

} // namespace detail

/// Integrate y' = f(t, y) from t0 to t1. f has signature
/// StateArray f(double t, const StateArray& y). on_step(t, y) is invoked
/// after every accepted step (and once for the initial state); pass a no-op
/// lambda when the intermediate states are not needed.
template <std::size_t N, class F, class Callback>
std::array<double, N> integrate_ode(F&& f, double t0, double t1,
                                    std::array<double, N> y,
                                    const OdeOptions& opts,
                                    Callback&& on_step) {
  using State = std::array<double, N>;
  if (t0 == t1) {
    on_step(t0, y);
    return y;
  }
  const double dir = (t1 > t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  double h = (opts.h_init > 0.0) ? opts.h_init * dir : 0.01 * span * dir;
  double t = t0;
  on_step(t, y);

  std::array<State, 7> k;
  long steps = 0;
  while (dir * (t1 - t) > 0.0) {
    // A step clamped to the endpoint may land one ulp short of t1; snap the
    // accepted time to t1 in that case so the remainder cannot starve the
    // underflow guard.
    bool last = false;
    if (std::abs(h) >= std::abs(t1 - t)) {
      h = t1 - t;
      last = true;
    }
    if (!last && std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
      throw NumericError("ode: step size underflow at z = " +
                         std::to_string(t));
    if (++steps > opts.max_steps)
      throw NumericError("ode: step budget exhausted at z = " +
                         std::to_string(t));

    k[0] = f(t, y);
    for (int s = 1; s < 7; ++s) {
      State ys = y;
      for (int j = 0; j < s; ++j) {
        const double a = detail::dp_a[s][j];
        if (a == 0.0) continue;
        for (std::size_t i = 0; i < N; ++i) ys[i] += h * a * k[j][i];
      }
      k[s] = f(t + detail::dp_c[s] * h, ys);
    }

    State y5 = y;
    State y4 = y;
    for (int s = 0; s < 7; ++s) {
      for (std::size_t i = 0; i < N; ++i) {
        y5[i] += h * detail::dp_b5[s] * k[s][i];
        y4[i] += h * detail::dp_b4[s] * k[s][i];
      }
    }

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc =
          opts.abs_tol +
          opts.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double e = (y5[i] - y4[i]) / sc;
      err += e * e;
    }
    err = std::sqrt(err / N);

    if (err <= 1.0) {
      t = last ? t1 : t + h;
      y = y5;
      on_step(t, y);
    }
    const double grow =
        (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::min(5.0, std::max(0.2, grow));
  }
  return y;
}

template <std::size_t N, class F>
std::array<double, N> integrate_ode(F&& f, double t0, double t1,
                                    std::array<double, N> y,
                                    const OdeOptions& opts = {}) {
  return integrate_ode<N>(static_cast<F&&>(f), t0, t1, y, opts,
                          [](double, const std::array<double, N>&) {});
}

} // namespace lenscope
