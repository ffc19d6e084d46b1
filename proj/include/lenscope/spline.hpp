// SPDX-License-Identifier: Apache-2.0
//
// Natural cubic spline through strictly increasing abscissae. The spline's
// own second derivative doubles as the interpolant's B'' for tabulated
// field profiles, so the second-derivative array is kept explicit.
#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "lenscope/errors.hpp"

namespace lenscope {

class CubicSpline {
public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 4 || y_.size() != n)
      throw DomainError("spline: need at least 4 matching samples");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw DomainError("spline: abscissae must be strictly increasing");

    // Tridiagonal solve for the interior second derivatives; natural
    // boundary conditions clamp M[0] = M[n-1] = 0.
    m_.assign(n, 0.0);
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    diag[0] = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      diag[i] = 2.0 * (h0 + h1);
      upper[i] = h1;
      rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    diag[n - 1] = 1.0;

    // Forward elimination (lower entry of row i is h0 = x[i]-x[i-1]).
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double w = (x_[i] - x_[i - 1]) / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
      if (i == 1) break;
    }
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  const std::vector<double>& knots() const { return x_; }

  /// Value, first, second, and third derivative at x. The third derivative
  /// is piecewise constant; the second is continuous but kinked at knots.
  struct Eval {
    double value;
    double d1;
    double d2;
    double d3;
  };

  Eval eval(double x) const {
    if (x < x_.front() || x > x_.back())
      throw DomainError("spline: abscissa " + std::to_string(x) +
                        " outside tabulated range [" +
                        std::to_string(x_.front()) + ", " +
                        std::to_string(x_.back()) + "]");
    std::size_t i =
        std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
    if (i == 0) i = 1;
    if (i == x_.size()) i = x_.size() - 1;
    const std::size_t lo = i - 1;
    const double h = x_[i] - x_[lo];
    const double A = (x_[i] - x) / h;
    const double B = (x - x_[lo]) / h;

    Eval e;
    e.value = A * y_[lo] + B * y_[i] +
              ((A * A * A - A) * m_[lo] + (B * B * B - B) * m_[i]) *
                  (h * h) / 6.0;
    e.d1 = (y_[i] - y_[lo]) / h -
           (3.0 * A * A - 1.0) / 6.0 * h * m_[lo] +
           (3.0 * B * B - 1.0) / 6.0 * h * m_[i];
    e.d2 = A * m_[lo] + B * m_[i];
    e.d3 = (m_[i] - m_[lo]) / h;
    return e;
  }

  double operator()(double x) const { return eval(x).value; }

private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_; // second derivatives at the knots
};

} // namespace lenscope
