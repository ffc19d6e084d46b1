// SPDX-License-Identifier: Apache-2.0
//
// Axial magnetic field models B(z) with analytic derivatives up to third
// order, and the lens-strength function alpha(z) = q B(z) / (2 p0) built
// on top of them. Lengths are mm, fields tesla.
//
// Models:
//   glaser     B(z) = B0 / (1 + (z/a)^2), the bell-shaped profile
//   power_law  B(z) = B0 k_n z^n, integer n with n > 0 or n < -1;
//              k_n is a user-supplied normalizer with units mm^-n
//   uniform    B(z) = B0
//   tabulated  natural cubic spline through (z, B) samples; the spline's
//              second derivative serves as B''
//
// For n < -1 the field diverges at z = 0, so the profile lives on one
// half-line chosen at construction and is never evaluated across zero.
#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lenscope/beam.hpp"
#include "lenscope/errors.hpp"
#include "lenscope/spline.hpp"

namespace lenscope {

enum class FieldModel { glaser, power_law, uniform, tabulated };

enum class HalfLine { negative, positive };

/// B and its first three derivatives at one axial position.
struct FieldDerivs {
  double B = 0.0;  // tesla
  double B1 = 0.0; // tesla/mm
  double B2 = 0.0; // tesla/mm^2
  double B3 = 0.0; // tesla/mm^3
};

namespace detail {

inline double ipow(double z, int m) {
  if (m < 0) return 1.0 / ipow(z, -m);
  double r = 1.0;
  double base = z;
  while (m > 0) {
    if (m & 1) r *= base;
    base *= base;
    m >>= 1;
  }
  return r;
}

// c * z^m, never touching z^m when the coefficient vanishes (m may be
// negative there).
inline double coeff_pow(double c, double z, int m) {
  if (c == 0.0) return 0.0;
  return c * ipow(z, m);
}

} // namespace detail

class FieldProfile {
public:
  static FieldProfile glaser(double B0, double a) {
    if (!(a > 0.0))
      throw DomainError("field: glaser half-width a must be positive");
    FieldProfile p;
    p.model_ = FieldModel::glaser;
    p.B0_ = B0;
    p.a_ = a;
    return p;
  }

  static FieldProfile uniform(double B0) {
    FieldProfile p;
    p.model_ = FieldModel::uniform;
    p.B0_ = B0;
    return p;
  }

  static FieldProfile power_law(double B0, double k_n, int n,
                                HalfLine half = HalfLine::positive) {
    if (n == 0 || n == -1)
      throw DomainError(
          "field: power-law exponent n must satisfy n > 0 or n < -1 "
          "(n = 0 and n = -1 cannot focus)");
    if (k_n == 0.0)
      throw DomainError("field: power-law normalizer k_n must be nonzero");
    FieldProfile p;
    p.model_ = FieldModel::power_law;
    p.B0_ = B0;
    p.k_n_ = k_n;
    p.n_ = n;
    p.half_ = half;
    if (n < 0) {
      if (half == HalfLine::positive)
        p.z_min_ = 0.0;
      else
        p.z_max_ = 0.0;
    }
    return p;
  }

  static FieldProfile tabulated(std::vector<double> z, std::vector<double> B) {
    FieldProfile p;
    p.model_ = FieldModel::tabulated;
    p.spline_ = CubicSpline(std::move(z), std::move(B));
    p.z_min_ = p.spline_.x_min();
    p.z_max_ = p.spline_.x_max();
    double peak = 0.0;
    for (double b : p.spline_.knots()) {
      const double v = std::abs(p.spline_(b));
      if (v > peak) {
        peak = v;
        p.B0_ = p.spline_(b);
      }
    }
    return p;
  }

  /// Two-column CSV (z, B) with a header line. Optional scale factors fold
  /// declared file units into mm / tesla.
  static FieldProfile tabulated_from_csv(const std::string& path,
                                         double z_scale = 1.0,
                                         double B_scale = 1.0) {
    std::ifstream in(path);
    if (!in) throw IoError("field: cannot open CSV file " + path);
    std::string line;
    if (!std::getline(in, line))
      throw DomainError("field: CSV file " + path + " is empty");
    std::vector<double> z, B;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
        continue;
      std::istringstream row(line);
      std::string zs, bs;
      if (!std::getline(row, zs, ',') || !std::getline(row, bs))
        throw DomainError("field: malformed CSV row at line " +
                          std::to_string(lineno) + " of " + path);
      try {
        z.push_back(std::stod(zs) * z_scale);
        B.push_back(std::stod(bs) * B_scale);
      } catch (const std::exception&) {
        throw DomainError("field: non-numeric CSV entry at line " +
                          std::to_string(lineno) + " of " + path);
      }
    }
    return tabulated(std::move(z), std::move(B));
  }

  FieldModel model() const { return model_; }
  double B0() const { return B0_; }
  double glaser_a() const { return a_; }
  double power_k() const { return k_n_; }
  int power_n() const { return n_; }
  HalfLine half() const { return half_; }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }

  /// Interior points where derivatives are only piecewise smooth
  /// (tabulated spline knots); quadratures split here.
  std::vector<double> breakpoints() const {
    if (model_ == FieldModel::tabulated) return spline_.knots();
    return {};
  }

  /// Length scale of the model: a for glaser, |k_n|^(-1/n) for power law
  /// (the distance where |k_n z^n| reaches one), the tabulated span, or
  /// 1 mm for a uniform field.
  double char_length() const {
    switch (model_) {
      case FieldModel::glaser:
        return a_;
      case FieldModel::power_law:
        return std::pow(std::abs(k_n_), -1.0 / n_);
      case FieldModel::tabulated:
        return z_max_ - z_min_;
      case FieldModel::uniform:
        return 1.0;
    }
    return 1.0;
  }

  /// Default start plane realizing the "object at infinity" setup for
  /// half-line power-law profiles: 1e4 characteristic lengths out on the
  /// profile's own half-line (negative half gives a negative z_start).
  double default_z_start() const {
    const double L = 1e4 * char_length();
    return (half_ == HalfLine::negative) ? -L : L;
  }

  FieldDerivs derivs(double z) const {
    check_domain(z);
    FieldDerivs d;
    switch (model_) {
      case FieldModel::uniform:
        d.B = B0_;
        break;
      case FieldModel::glaser: {
        const double u = z / a_;
        const double s = 1.0 + u * u;
        d.B = B0_ / s;
        d.B1 = -2.0 * B0_ * u / (a_ * s * s);
        d.B2 = B0_ * (6.0 * u * u - 2.0) / (a_ * a_ * s * s * s);
        d.B3 = 24.0 * B0_ * u * (1.0 - u * u) / (a_ * a_ * a_ * s * s * s * s);
        break;
      }
      case FieldModel::power_law: {
        const double c = B0_ * k_n_;
        const double n = n_;
        d.B = detail::coeff_pow(c, z, n_);
        d.B1 = detail::coeff_pow(c * n, z, n_ - 1);
        d.B2 = detail::coeff_pow(c * n * (n - 1), z, n_ - 2);
        d.B3 = detail::coeff_pow(c * n * (n - 1) * (n - 2), z, n_ - 3);
        break;
      }
      case FieldModel::tabulated: {
        const CubicSpline::Eval e = spline_.eval(z);
        d.B = e.value;
        d.B1 = e.d1;
        d.B2 = e.d2;
        d.B3 = e.d3;
        break;
      }
    }
    return d;
  }

private:
  void check_domain(double z) const {
    if (model_ == FieldModel::power_law && n_ < 0 && z == 0.0)
      throw DomainError("field: power-law profile with negative exponent is "
                        "singular at z = 0");
    if (z < z_min_ || z > z_max_)
      throw DomainError("field: z = " + std::to_string(z) +
                        " outside profile domain [" + std::to_string(z_min_) +
                        ", " + std::to_string(z_max_) + "]");
  }

  FieldModel model_ = FieldModel::uniform;
  double B0_ = 0.0;
  double a_ = 0.0;
  double k_n_ = 0.0;
  int n_ = 0;
  HalfLine half_ = HalfLine::positive;
  CubicSpline spline_;
  double z_min_ = -std::numeric_limits<double>::infinity();
  double z_max_ = std::numeric_limits<double>::infinity();
};

/// B, B', B'' at z.
inline std::array<double, 3> field_at(const FieldProfile& profile, double z) {
  const FieldDerivs d = profile.derivs(z);
  return {d.B, d.B1, d.B2};
}

/// The lens-strength function alpha(z) = q B(z)/(2 p0) and its derivatives.
/// alpha0 is the conversion applied to the model amplitude B0, so
/// alpha(z) = alpha0 / (1 + (z/a)^2) for glaser and
/// alpha(z) = alpha0 k_n z^n for the power law.
class LensStrength {
public:
  LensStrength(FieldProfile profile, BeamKinematics beam)
      : profile_(std::move(profile)), beam_(beam),
        conv_(beam.alpha_per_mm(1.0)), alpha0_(conv_ * profile_.B0()) {}

  const FieldProfile& profile() const { return profile_; }
  const BeamKinematics& beam() const { return beam_; }
  double alpha0() const { return alpha0_; }

  double alpha(double z) const { return conv_ * profile_.derivs(z).B; }

  /// alpha, alpha', ... up to the requested order (at most 3).
  std::vector<double> alpha_derivs(double z, int order) const {
    if (order < 0 || order > 3)
      throw DomainError("alpha_derivs: order must be between 0 and 3");
    const FieldDerivs d = profile_.derivs(z);
    const double all[4] = {conv_ * d.B, conv_ * d.B1, conv_ * d.B2,
                           conv_ * d.B3};
    return std::vector<double>(all, all + order + 1);
  }

  /// alpha^2, the paraxial restoring coefficient.
  double alpha_sq(double z) const {
    const double a = alpha(z);
    return a * a;
  }

private:
  FieldProfile profile_;
  BeamKinematics beam_;
  double conv_;   // tesla -> 1/mm including the charge sign
  double alpha0_; // 1/mm
};

} // namespace lenscope
