// SPDX-License-Identifier: Apache-2.0
//
// Special functions needed by the power-law lens solutions: gamma for
// positive arguments, Pochhammer symbols, and fractional-order Bessel J
// evaluated by its ascending series. The lens use cases keep the argument
// modest (|zeta| well below 50), so no asymptotic branch is provided; the
// series either converges within the term budget or reports failure.
#pragma once

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "lenscope/errors.hpp"

namespace lenscope {

/// Truncation control for series evaluations.
struct SeriesControl {
  double rel_tol = 1e-14;
  int max_terms = 200;
};

/// Pochhammer symbol (a)_j = a (a+1) ... (a+j-1), with (a)_0 = 1.
inline double pochhammer(double a, int j) {
  if (j < 0) throw DomainError("pochhammer: negative index");
  double p = 1.0;
  for (int i = 0; i < j; ++i) p *= a + i;
  return p;
}

namespace detail {

// Lanczos approximation, g = 7 with 9 coefficients. This fixed set gives
// close to full double precision for real x >= 0.5.
inline double lanczos_gamma(double x) {
  static const double c[9] = {
      0.99999999999980993,
      676.5203681218851,
      -1259.1392167224028,
      771.32342877765313,
      -176.61502916214059,
      12.507343278686905,
      -0.13857109526572012,
      9.9843695780195716e-6,
      1.5056327351493116e-7,
  };
  const double two_pi = 6.283185307179586476925286766559;
  double acc = c[0];
  for (int i = 1; i < 9; ++i) acc += c[i] / (x - 1.0 + i);
  const double t = x + 6.5; // x + g - 1/2
  return std::sqrt(two_pi) * std::pow(t, x - 0.5) * std::exp(-t) * acc;
}

} // namespace detail

/// Gamma function for x > 0. Arguments below 1/2 are lifted through the
/// recurrence Gamma(x) = Gamma(x+1)/x before applying the fixed-coefficient
/// rational approximation.
inline double gamma_fn(double x) {
  if (!(x > 0.0))
    throw DomainError("gamma_fn: argument must be positive, got " +
                      std::to_string(x));
  if (x < 0.5) return detail::lanczos_gamma(x + 1.0) / x;
  return detail::lanczos_gamma(x);
}

/// Outcome of a truncated series evaluation.
struct SeriesResult {
  double value = 0.0;
  int terms = 0;       // number of terms summed
  bool converged = false;
};

/// Ascending series for the Bessel function of the first kind,
///
///   J_nu(zeta) = sum_j (-1)^j / (j! Gamma(nu+j+1)) (zeta/2)^(2j+nu),
///
/// summed until |term| < rel_tol * |partial sum|. Defined for zeta >= 0;
/// a caller that needs J_nu(-zeta) applies the (-1)^nu phase itself where
/// its real combination is formed. Negative non-integer orders are allowed
/// (they appear with a compensating Gamma prefactor in the lens solutions),
/// but then zeta must be strictly positive.
inline SeriesResult bessel_j_series(double nu, double zeta,
                                    const SeriesControl& ctl = {}) {
  if (!(ctl.rel_tol > 0.0) || ctl.max_terms < 10)
    throw DomainError("bessel_j: invalid SeriesControl");
  if (zeta < 0.0)
    throw DomainError("bessel_j: zeta must be >= 0");
  if (std::abs(nu) > 5.0)
    throw DomainError("bessel_j: |nu| > 5 outside supported range");

  // Negative integer order reduces to positive order with a sign.
  double sign = 1.0;
  if (nu < 0.0 && nu == std::floor(nu)) {
    int m = static_cast<int>(-nu);
    nu = -nu;
    if (m % 2 == 1) sign = -1.0;
  }

  SeriesResult r;
  if (zeta == 0.0) {
    if (nu == 0.0) {
      r.value = 1.0;
    } else if (nu > 0.0) {
      r.value = 0.0;
    } else {
      throw DomainError("bessel_j: negative order diverges at zeta = 0");
    }
    r.terms = 1;
    r.converged = true;
    return r;
  }

  const double half = 0.5 * zeta;
  const double q = half * half;
  double term = sign * std::pow(half, nu) / gamma_fn(nu + 1.0);
  double sum = term;
  for (int j = 1; j <= ctl.max_terms; ++j) {
    term *= -q / (j * (nu + j));
    sum += term;
    if (std::abs(term) < ctl.rel_tol * std::abs(sum)) {
      r.value = sum;
      r.terms = j + 1;
      r.converged = true;
      return r;
    }
  }
  r.value = sum;
  r.terms = ctl.max_terms + 1;
  r.converged = false;
  return r;
}

/// Throwing wrapper around bessel_j_series.
inline double bessel_j(double nu, double zeta, const SeriesControl& ctl = {}) {
  SeriesResult r = bessel_j_series(nu, zeta, ctl);
  if (!r.converged)
    throw NumericError("bessel_j: series did not converge within " +
                       std::to_string(ctl.max_terms) + " terms at zeta = " +
                       std::to_string(zeta));
  return r.value;
}

} // namespace lenscope
