// SPDX-License-Identifier: Apache-2.0
//
// Fundamental solutions g(z, zi), h(z, zi) of the rotating-frame paraxial
// equation R'' + alpha^2(z) R = 0, by four routes:
//
//   * Glaser model: closed form in the substitution variable phi = arccot(z/a)
//   * power-law model (n > 0): fractional-order Bessel series about zi = 0
//   * Peano-Baker iterated-integral series on a uniform quadrature grid
//   * adaptive Runge-Kutta integration of the equivalent first-order system
//
// plus the Larmor rotation angle, the assembled 4x4 laboratory-frame transfer
// map, centroid traces, image-plane location, and cardinal elements.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lenscope/errors.hpp"
#include "lenscope/field.hpp"
#include "lenscope/ode.hpp"
#include "lenscope/quadrature.hpp"
#include "lenscope/specfun.hpp"
#include "lenscope/spline.hpp"

namespace lenscope {

/// The two fundamental solutions of R'' + alpha^2 R = 0 between the planes
/// zi and z, with (g, g', h, h') = (1, 0, 0, 1) at z = zi.  The Wronskian
/// g h' - g' h is exactly 1 for the true solutions; computed values carry it
/// to roundoff and callers may use it as a diagnostic.
struct FundamentalPair {
  double zi = 0.0;      // mm
  double z = 0.0;       // mm
  double g = 1.0;       // dimensionless
  double g_prime = 0.0; // 1/mm
  double h = 0.0;       // mm
  double h_prime = 1.0; // dimensionless
};

inline double wronskian(const FundamentalPair& p) {
  return p.g * p.h_prime - p.g_prime * p.h;
}

/// Laboratory-frame first-order map between the planes pair.zi and pair.z.
/// The 4x4 matrix acts on (x, y, px/p0, py/p0) and has the block structure
///
///     [ g R   h R  ]          [  cos(theta)  sin(theta) ]
///     [ g'R   h'R  ],   R  =  [ -sin(theta)  cos(theta) ],
///
/// where theta is the Larmor angle between the two planes.
struct TransferMap {
  FundamentalPair pair;
  double theta = 0.0; // radians
  std::array<std::array<double, 4>, 4> matrix{};
};

/// Quantum-average beam centroid in one transverse plane: position in mm and
/// transverse momentum as a fraction of the design momentum p0.
struct CentroidState {
  double x = 0.0;
  double y = 0.0;
  double px_over_p0 = 0.0;
  double py_over_p0 = 0.0;
};

struct CardinalElements {
  double M = 0.0;        // transverse magnification, -g(z_im, z_ob)
  double f = 0.0;        // focal length, -1/g'(z_im, z_ob), mm
  double theta_im = 0.0; // image rotation, radians
};

/// Larmor rotation angle theta(z, zi) = integral of alpha over [zi, z],
/// by adaptive quadrature to the requested absolute tolerance.
inline double larmor_angle(const LensStrength& ls, double zi, double z,
                           double tol = 1e-10) {
  if (zi == z) return 0.0;
  QuadratureOptions opts;
  opts.abs_tol = tol;
  opts.rel_tol = tol;
  auto alpha = [&ls](double s) { return ls.alpha(s); };
  return integrate_segmented(alpha, zi, z, ls.profile().breakpoints(), opts)
      .value;
}

/// Closed-form fundamental pair for the Glaser model.  With z = a cot(phi)
/// the paraxial equation becomes u'' + omega^2 u = 0 in phi, where
/// omega = sqrt(1 + alpha0^2 a^2), so g and h are trigonometric in
/// omega (phi - phi_i) divided by sin(phi) factors.  phi runs continuously
/// from pi at z = -infinity through pi/2 at z = 0 to 0 at z = +infinity,
/// which atan2(a, z) realizes without a branch cut.
inline FundamentalPair glaser_pair(const LensStrength& ls, double zi,
                                   double z) {
  if (ls.profile().model() != FieldModel::glaser)
    throw DomainError("glaser_pair: profile is not a Glaser model");
  const double a = ls.profile().glaser_a();
  const double alpha0 = ls.alpha0();
  const double omega = std::sqrt(1.0 + alpha0 * alpha0 * a * a);

  const double phi = std::atan2(a, z);
  const double phii = std::atan2(a, zi);
  const double dphi = phi - phii;
  const double sphi = std::sin(phi), cphi = std::cos(phi);
  const double sphii = std::sin(phii), cphii = std::cos(phii);
  const double sw = std::sin(omega * dphi), cw = std::cos(omega * dphi);

  // Numerator of g as a function of phi, and its phi-derivative.
  const double num = omega * sphii * cw + cphii * sw;
  const double dnum = omega * (cphii * cw - omega * sphii * sw);

  FundamentalPair p;
  p.zi = zi;
  p.z = z;
  p.g = num / (omega * sphi);
  p.h = -a * sw / (omega * sphii * sphi);
  // z-derivatives via the chain rule with dphi/dz = -sin^2(phi)/a.
  p.g_prime = -(dnum * sphi - num * cphi) / (a * omega);
  p.h_prime = (omega * cw * sphi - sw * cphi) / (omega * sphii);
  return p;
}

namespace detail {

// Shared shape of the two power-law series about zi = 0.  Both g and h are
// even series in q = alpha0 k_n z^(n+1) / (2(n+1)):
//
//   sum_j (-1)^j / ((c)_j j!) q^(2j),
//
// with c = (2n+1)/(2n+2) for g and c = (2n+3)/(2n+2) for h.  Because the
// j-th term of g carries z^(2j(n+1)) and the j-th term of h carries
// z^(2j(n+1)+1), the z-derivatives follow term by term: each g term picks up
// a factor 2j(n+1)/z and each h term a factor (2j(n+1)+1)/z.  The sums
// returned here are the plain series value and the series weighted by the
// per-term power of z (so the caller forms the derivative with one division).
struct PowerSeriesSums {
  double plain = 0.0;
  double weighted = 0.0; // sum of term_j * (z-exponent of term j)
  bool converged = false;
};

inline PowerSeriesSums powerlaw_series(double c, double q2, int n,
                                       bool odd_chain,
                                       const SeriesControl& ctl = {}) {
  PowerSeriesSums out;
  double term = 1.0;
  double plain = 1.0;
  double weighted = odd_chain ? 1.0 : 0.0; // exponent of the j = 0 term
  for (int j = 0; j < ctl.max_terms; ++j) {
    term *= -q2 / ((c + j) * (j + 1));
    const double expo = 2.0 * (j + 1) * (n + 1) + (odd_chain ? 1.0 : 0.0);
    plain += term;
    weighted += term * expo;
    if (std::abs(term) < ctl.rel_tol * std::abs(plain)) {
      out.converged = true;
      break;
    }
  }
  out.plain = plain;
  out.weighted = weighted;
  return out;
}

} // namespace detail

/// Fundamental pair for the power-law model B = B0 k_n z^n with n >= 1 and
/// the reference plane fixed at zi = 0 (the electron enters from the
/// field-free point of the profile).  Values of g and h come from the
/// gamma-prefactored Bessel forms
///
///   g = Gamma((2n+1)/(2n+2)) (|zeta|/2)^(1/(2n+2))  J_(-1/(2n+2))(|zeta|)
///   h = z Gamma((2n+3)/(2n+2)) (|zeta|/2)^(-1/(2n+2)) J_(+1/(2n+2))(|zeta|)
///
/// with zeta = alpha0 k_n z^(n+1)/(n+1); both products are even in zeta, so
/// the absolute value loses nothing and keeps the fractional powers real.
/// The derivatives come from the term-wise differentiated power series.
inline FundamentalPair powerlaw_pair_pos(const LensStrength& ls, double z) {
  const FieldProfile& pr = ls.profile();
  if (pr.model() != FieldModel::power_law)
    throw DomainError("powerlaw_pair_pos: profile is not a power-law model");
  const int n = pr.power_n();
  if (n < 1)
    throw DomainError("powerlaw_pair_pos: exponent must be >= 1");
  if (z < 0.0)
    throw DomainError("powerlaw_pair_pos: z must be >= 0");

  const double ak = ls.alpha0() * pr.power_k();
  const double zeta = std::abs(ak) * std::pow(z, n + 1) / (n + 1);
  const double nu = 1.0 / (2.0 * (n + 1));
  const double cg = (2.0 * n + 1.0) / (2.0 * n + 2.0);
  const double ch = (2.0 * n + 3.0) / (2.0 * n + 2.0);

  FundamentalPair p;
  p.zi = 0.0;
  p.z = z;
  if (zeta == 0.0) {
    p.h = z; // alpha0 k_n = 0 or z = 0; the lens has not acted yet
    return p;
  }

  p.g = gamma_fn(cg) * std::pow(0.5 * zeta, nu) * bessel_j(-nu, zeta);
  p.h = z * gamma_fn(ch) * std::pow(0.5 * zeta, -nu) * bessel_j(nu, zeta);

  const double q = 0.5 * zeta; // |alpha0 k_n| z^(n+1) / (2(n+1))
  const auto sg = detail::powerlaw_series(cg, q * q, n, false);
  const auto sh = detail::powerlaw_series(ch, q * q, n, true);
  if (!sg.converged || !sh.converged)
    throw NumericError("powerlaw_pair_pos: series for the derivatives did "
                       "not converge at z = " +
                       std::to_string(z));
  p.g_prime = sg.weighted / z;
  p.h_prime = sh.weighted;
  return p;
}

/// Even series evaluation of g for a decaying power-law field B0 k_n z^n
/// with n <= -2, referenced to the field-free region far from the origin.
/// Writing m = -n, the series runs in inverse powers of z,
///
///   g = sum_j (-1)^j / (((2m-1)/(2m-2))_j j!)
///           (alpha0 k_n / (2(m-1) z^(m-1)))^(2j),
///
/// which is real on either half-line.  Used as an analytic cross-check of
/// the numerically integrated pair; converges only while the argument is
/// moderate, so callers should keep |zeta| = |alpha0 k_n/((m-1) z^(m-1))|
/// well below the order of 10.
inline double powerlaw_g_series_neg(const LensStrength& ls, double z) {
  const FieldProfile& pr = ls.profile();
  if (pr.model() != FieldModel::power_law || pr.power_n() > -2)
    throw DomainError(
        "powerlaw_g_series_neg: profile is not a decaying power law");
  if (z == 0.0)
    throw DomainError("powerlaw_g_series_neg: z = 0 is singular");
  const int m = -pr.power_n();
  const double c = (2.0 * m - 1.0) / (2.0 * m - 2.0);
  const double half_zeta =
      ls.alpha0() * pr.power_k() / (2.0 * (m - 1) * detail::ipow(z, m - 1));
  const SeriesControl ctl;
  double term = 1.0;
  double sum = 1.0;
  for (int j = 0; j < ctl.max_terms; ++j) {
    term *= -(half_zeta * half_zeta) / ((c + j) * (j + 1));
    sum += term;
    if (std::abs(term) < ctl.rel_tol * std::abs(sum)) return sum;
  }
  throw NumericError("powerlaw_g_series_neg: series did not converge "
                     "(|zeta| too large at z = " +
                     std::to_string(z) + ")");
}

/// Fundamental pair for a decaying power-law field (n <= -2), integrated
/// numerically from a start plane deep in the field-free region toward the
/// origin.  z and z_start must lie on the same half-line; the profile is
/// singular at z = 0 and the integration refuses to cross it.
inline FundamentalPair powerlaw_pair_neg(const LensStrength& ls, double z,
                                         double z_start) {
  const FieldProfile& pr = ls.profile();
  if (pr.model() != FieldModel::power_law || pr.power_n() > -2)
    throw DomainError(
        "powerlaw_pair_neg: profile is not a decaying power law");
  if (z == 0.0 || z_start == 0.0 || (z > 0.0) != (z_start > 0.0))
    throw DomainError("powerlaw_pair_neg: interval crosses the axis "
                      "singularity at z = 0");

  auto rhs = [&ls](double s, const std::array<double, 4>& y) {
    const double a2 = ls.alpha_sq(s);
    return std::array<double, 4>{y[1], -a2 * y[0], y[3], -a2 * y[2]};
  };
  std::array<double, 4> y{1.0, 0.0, 0.0, 1.0};
  OdeOptions opts;
  opts.rel_tol = 1e-12;
  opts.abs_tol = 1e-14 * std::max(1.0, std::abs(z - z_start));
  y = integrate_ode<4>(rhs, z_start, z, y, opts);

  FundamentalPair p;
  p.zi = z_start;
  p.z = z;
  p.g = y[0];
  p.g_prime = y[1];
  p.h = y[2];
  p.h_prime = y[3];
  return p;
}

namespace detail {

// Cumulative integral of samples on a uniform grid, by local parabolas.
// Even indices reproduce composite Simpson exactly; odd indices add the
// half-panel of the parabola through the surrounding three samples, which
// keeps fourth-order accuracy at every grid point.  step may be negative.
inline std::vector<double> cumulative_uniform(const std::vector<double>& f,
                                              double step) {
  const std::size_t n = f.size();
  std::vector<double> F(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    if (j % 2 == 0) {
      F[j] = F[j - 2] + step / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
    } else if (j + 1 < n) {
      F[j] = F[j - 1] + step / 12.0 * (5.0 * f[j - 1] + 8.0 * f[j] - f[j + 1]);
    } else {
      F[j] =
          F[j - 1] + step / 12.0 * (-f[j - 2] + 8.0 * f[j - 1] + 5.0 * f[j]);
    }
  }
  return F;
}

} // namespace detail

/// Magnitudes of the last iterated-integral term kept in each series, as a
/// truncation estimate for the Peano-Baker pair.
struct PeanoBakerTruncation {
  double g_term = 0.0;
  double h_term = 0.0;
};

/// Truncated Peano-Baker series for the fundamental pair.  The transfer
/// matrix is the path-ordered exponential of the system matrix; expanding it
/// gives
///
///   g = 1 - II[alpha^2] + II[alpha^2 II[alpha^2]] - ...
///   h = (z - zi) - II[alpha^2 (s - zi)] + ...
///
/// where II denotes the double integral from zi.  Each iterate is built by
/// two cumulative quadrature passes over a uniform grid of n_steps panels
/// (rounded up to an even count).  `order` is the number of iterated terms
/// kept beyond the leading one; the magnitude of the last kept term is
/// reported through `trunc` when given.
inline FundamentalPair peano_baker_pair(const LensStrength& ls, double zi,
                                        double z, int order, int n_steps,
                                        PeanoBakerTruncation* trunc = nullptr) {
  if (order < 1)
    throw DomainError("peano_baker_pair: order must be >= 1");
  if (n_steps < 2)
    throw DomainError("peano_baker_pair: n_steps must be >= 2");
  if (n_steps % 2 != 0) ++n_steps;

  FundamentalPair p;
  p.zi = zi;
  p.z = z;
  if (zi == z) {
    if (trunc) *trunc = {};
    return p;
  }

  const std::size_t npts = static_cast<std::size_t>(n_steps) + 1;
  const double step = (z - zi) / n_steps;
  std::vector<double> a2(npts);
  for (std::size_t j = 0; j < npts; ++j)
    a2[j] = ls.alpha_sq(zi + step * static_cast<double>(j));

  std::vector<double> G(npts, 1.0), H(npts);
  for (std::size_t j = 0; j < npts; ++j)
    H[j] = step * static_cast<double>(j);

  double g = 1.0, gp = 0.0;
  double h = z - zi, hp = 1.0;
  double g_last = 0.0, h_last = 0.0;

  std::vector<double> w(npts);
  for (int k = 0; k < order; ++k) {
    // g chain
    for (std::size_t j = 0; j < npts; ++j) w[j] = a2[j] * G[j];
    std::vector<double> inner = detail::cumulative_uniform(w, step);
    std::vector<double> outer = detail::cumulative_uniform(inner, step);
    for (std::size_t j = 0; j < npts; ++j) G[j] = -outer[j];
    g += G.back();
    gp += -inner.back();
    g_last = std::abs(G.back());

    // h chain
    for (std::size_t j = 0; j < npts; ++j) w[j] = a2[j] * H[j];
    inner = detail::cumulative_uniform(w, step);
    outer = detail::cumulative_uniform(inner, step);
    for (std::size_t j = 0; j < npts; ++j) H[j] = -outer[j];
    h += H.back();
    hp += -inner.back();
    h_last = std::abs(H.back());
  }

  if (trunc) {
    trunc->g_term = g_last;
    trunc->h_term = h_last;
  }
  p.g = g;
  p.g_prime = gp;
  p.h = h;
  p.h_prime = hp;
  return p;
}

/// Peano-Baker pair over [zi, z] split into n_segments subintervals, with
/// the truncated series evaluated on each and the resulting 2x2 matrices
/// composed in path order.  The series truncation error shrinks factorially
/// with the per-segment phase advance, so moderate orders reach far tighter
/// accuracy composed than over the whole interval at once.
inline FundamentalPair peano_baker_composed(const LensStrength& ls, double zi,
                                            double z, int order,
                                            int n_segments,
                                            int steps_per_segment) {
  if (n_segments < 1)
    throw DomainError("peano_baker_composed: n_segments must be >= 1");
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
  const double step = (z - zi) / n_segments;
  for (int s = 0; s < n_segments; ++s) {
    const double a = zi + step * s;
    const double b = (s + 1 == n_segments) ? z : a + step;
    const FundamentalPair seg =
        peano_baker_pair(ls, a, b, order, steps_per_segment);
    const double n00 = seg.g * m00 + seg.h * m10;
    const double n01 = seg.g * m01 + seg.h * m11;
    const double n10 = seg.g_prime * m00 + seg.h_prime * m10;
    const double n11 = seg.g_prime * m01 + seg.h_prime * m11;
    m00 = n00;
    m01 = n01;
    m10 = n10;
    m11 = n11;
  }
  FundamentalPair p;
  p.zi = zi;
  p.z = z;
  p.g = m00;
  p.h = m01;
  p.g_prime = m10;
  p.h_prime = m11;
  return p;
}

/// Reference route: adaptive Runge-Kutta integration of the first-order
/// system (g, g', h, h')' = (g', -alpha^2 g, h', -alpha^2 h) from the
/// identity initial condition at zi.
inline FundamentalPair ode_pair(const LensStrength& ls, double zi, double z,
                                double rel_tol = 1e-12) {
  FundamentalPair p;
  p.zi = zi;
  p.z = z;
  if (zi == z) return p;

  auto rhs = [&ls](double s, const std::array<double, 4>& y) {
    const double a2 = ls.alpha_sq(s);
    return std::array<double, 4>{y[1], -a2 * y[0], y[3], -a2 * y[2]};
  };
  std::array<double, 4> y{1.0, 0.0, 0.0, 1.0};
  OdeOptions opts;
  opts.rel_tol = rel_tol;
  opts.abs_tol = 1e-14 * std::max(1.0, std::abs(z - zi));
  y = integrate_ode<4>(rhs, zi, z, y, opts);
  p.g = y[0];
  p.g_prime = y[1];
  p.h = y[2];
  p.h_prime = y[3];
  return p;
}

/// Fundamental pair by the most accurate route available for the profile:
/// closed forms for the Glaser, uniform, and (from zi = 0, z >= 0) positive
/// power-law models, Runge-Kutta integration otherwise.
inline FundamentalPair pair_between(const LensStrength& ls, double zi,
                                    double z, double rel_tol = 1e-12) {
  const FieldProfile& pr = ls.profile();
  switch (pr.model()) {
  case FieldModel::glaser:
    return glaser_pair(ls, zi, z);
  case FieldModel::uniform: {
    FundamentalPair p;
    p.zi = zi;
    p.z = z;
    const double a0 = ls.alpha0();
    const double dz = z - zi;
    if (a0 == 0.0) {
      p.h = dz;
    } else {
      p.g = std::cos(a0 * dz);
      p.g_prime = -a0 * std::sin(a0 * dz);
      p.h = std::sin(a0 * dz) / a0;
      p.h_prime = p.g;
    }
    return p;
  }
  case FieldModel::power_law:
    if (pr.power_n() >= 1 && zi == 0.0 && z >= 0.0)
      return powerlaw_pair_pos(ls, z);
    return ode_pair(ls, zi, z, rel_tol);
  case FieldModel::tabulated:
  default:
    return ode_pair(ls, zi, z, rel_tol);
  }
}

/// Assemble the 4x4 laboratory-frame transfer map from a fundamental pair
/// and the Larmor angle between its planes.
inline TransferMap transfer_map(const FundamentalPair& pair, double theta) {
  TransferMap m;
  m.pair = pair;
  m.theta = theta;
  const double c = std::cos(theta), s = std::sin(theta);
  const double rot[2][2] = {{c, s}, {-s, c}};
  const double coef[2][2] = {{pair.g, pair.h}, {pair.g_prime, pair.h_prime}};
  for (int br = 0; br < 2; ++br)
    for (int bc = 0; bc < 2; ++bc)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          m.matrix[2 * br + i][2 * bc + j] = coef[br][bc] * rot[i][j];
  return m;
}

inline CentroidState apply(const TransferMap& m, const CentroidState& s) {
  const std::array<double, 4> v{s.x, s.y, s.px_over_p0, s.py_over_p0};
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out[i] += m.matrix[i][j] * v[j];
  return CentroidState{out[0], out[1], out[2], out[3]};
}

/// Trace the beam centroid from the plane zi through each sample plane.
/// Samples must be ordered away from zi so the underlying integrations can
/// continue from plane to plane.
inline std::vector<std::pair<double, CentroidState>>
trace_centroid(const LensStrength& ls, const CentroidState& initial,
               double zi, const std::vector<double>& z_samples) {
  for (std::size_t i = 1; i < z_samples.size(); ++i)
    if ((z_samples[i] - z_samples[i - 1]) * (z_samples.back() - zi) < 0.0)
      throw DomainError("trace_centroid: samples must be ordered");

  std::vector<std::pair<double, CentroidState>> out;
  out.reserve(z_samples.size());
  for (double z : z_samples) {
    const FundamentalPair p = pair_between(ls, zi, z);
    const double theta = larmor_angle(ls, zi, z);
    out.emplace_back(z, apply(transfer_map(p, theta), initial));
  }
  return out;
}

namespace detail {

// Root refinement inside a sign-change bracket: secant proposals accepted
// while they fall inside the bracket and shrink it, bisection otherwise.
template <class F>
double refine_root(F& f, double a, double fa, double b, double fb,
                   double tol) {
  for (int it = 0; it < 200 && std::abs(b - a) > tol; ++it) {
    double m = 0.5 * (a + b);
    if (fb != fa) {
      const double sec = b - fb * (b - a) / (fb - fa);
      const double lo = std::min(a, b), hi = std::max(a, b);
      if (sec > lo && sec < hi) m = sec;
    }
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
  }
  return 0.5 * (a + b);
}

} // namespace detail

///// Locate an image plane of the object plane z_ob: the first zero of
/// h(z, z_ob) inside the search bracket, refined to the given tolerance.
/// The trivial zero at z = z_ob itself is skipped, as is any root within
/// z_min_gap of the object plane.  Throws when h has no sign change in
/// the bracket (a drift, for example, never images).
inline double find_image_plane(const LensStrength& ls, double z_ob,
                               std::pair<double, double> search,
                               double tol = 1e-12, double z_min_gap = 0.0) {
  if (!(search.second > search.first))
    throw DomainError("find_image_plane: empty search bracket");
  if (!(z_min_gap >= 0.0))
    throw DomainError("find_image_plane: z_min_gap must be non-negative");
  const double guard = std::max(
      {1e-9 * ls.profile().char_length(), 16.0 * tol, z_min_gap});

  auto hval = [&](double z) { return pair_between(ls, z_ob, z).h; };

  const int n_scan = 256;
  const double step = (search.second - search.first) / n_scan;
  double za = search.first;
  double fa = hval(za);
  for (int i = 1; i <= n_scan; ++i) {
    const double zb = (i == n_scan) ? search.second : search.first + i * step;
    const double fb = hval(zb);
    const bool spans_origin = (za - z_ob) * (zb - z_ob) <= 0.0;
    if (!spans_origin && (fa == 0.0 || (fa > 0.0) != (fb > 0.0))) {
      const double root =
          fa == 0.0 ? za : detail::refine_root(hval, za, fa, zb, fb, tol);
      if (std::abs(root - z_ob) > guard) return root;
    }
    za = zb;
    fa = fb;
  }
  throw NumericError("find_image_plane: h(z, z_ob) has no sign change in "
                     "the search bracket [" +
                     std::to_string(search.first) + ", " +
                     std::to_string(search.second) + "]");
}

/// Magnification, focal length, and image rotation for a conjugate pair of
/// planes.  Requires h(z_im, z_ob) to vanish (the planes actually image);
/// the Wronskian then forces h' = -1/M, which callers can use as a check.
inline CardinalElements cardinal_elements(const LensStrength& ls, double z_ob,
                                          double z_im) {
  const FundamentalPair p = pair_between(ls, z_ob, z_im);
  const double scale =
      std::max(ls.profile().char_length(), std::abs(z_im - z_ob));
  if (std::abs(p.h) > 1e-8 * scale)
    throw NumericError("cardinal_elements: h(z_im, z_ob) = " +
                       std::to_string(p.h) +
                       " is not zero; the planes are not conjugate");
  if (std::abs(p.g_prime) * scale < 1e-13)
    throw NumericError("cardinal_elements: g'(z_im, z_ob) is zero; the "
                       "system is afocal between these planes");
  CardinalElements c;
  c.M = -p.g;
  c.f = -1.0 / p.g_prime;
  c.theta_im = larmor_angle(ls, z_ob, z_im);
  return c;
}

/// Dense fundamental-pair evaluator for profiles without a closed form.
/// One Runge-Kutta sweep from zi fills a uniform grid across [z_lo, z_hi];
/// cubic splines through the four state components then serve arbitrary
/// z queries, so quadratures over the pair cost spline evaluations instead
/// of fresh integrations.
class PairInterpolant {
public:
  PairInterpolant(const LensStrength& ls, double zi, double z_lo, double z_hi,
                  std::size_t n_samples = 4001, double rel_tol = 1e-12)
      : zi_(zi) {
    if (!(z_hi > z_lo))
      throw DomainError("PairInterpolant: range must have positive width");
    if (zi < z_lo || zi > z_hi)
      throw DomainError("PairInterpolant: zi must lie inside the range");
    if (n_samples < 8) n_samples = 8;

    std::vector<double> zs(n_samples);
    const double step = (z_hi - z_lo) / static_cast<double>(n_samples - 1);
    for (std::size_t i = 0; i < n_samples; ++i)
      zs[i] = (i + 1 == n_samples) ? z_hi : z_lo + step * i;

    std::vector<double> g(n_samples), gp(n_samples), h(n_samples),
        hp(n_samples);
    auto rhs = [&ls](double s, const std::array<double, 4>& y) {
      const double a2 = ls.alpha_sq(s);
      return std::array<double, 4>{y[1], -a2 * y[0], y[3], -a2 * y[2]};
    };
    OdeOptions opts;
    opts.rel_tol = rel_tol;
    opts.abs_tol = 1e-14 * std::max(1.0, z_hi - z_lo);

    // Sweep right from zi through the grid points at or above it, then left
    // through the rest, continuing the state between neighbouring targets.
    auto sweep = [&](bool up) {
      std::array<double, 4> y{1.0, 0.0, 0.0, 1.0};
      double from = zi_;
      const auto n = static_cast<std::ptrdiff_t>(n_samples);
      const std::ptrdiff_t first_above =
          std::lower_bound(zs.begin(), zs.end(), zi_) - zs.begin();
      std::ptrdiff_t i = up ? first_above : first_above - 1;
      for (; up ? i < n : i >= 0; up ? ++i : --i) {
        const double target = zs[static_cast<std::size_t>(i)];
        if (target != from) y = integrate_ode<4>(rhs, from, target, y, opts);
        from = target;
        g[static_cast<std::size_t>(i)] = y[0];
        gp[static_cast<std::size_t>(i)] = y[1];
        h[static_cast<std::size_t>(i)] = y[2];
        hp[static_cast<std::size_t>(i)] = y[3];
      }
    };
    sweep(true);
    sweep(false);

    g_ = CubicSpline(zs, g);
    gp_ = CubicSpline(zs, gp);
    h_ = CubicSpline(zs, h);
    hp_ = CubicSpline(std::move(zs), hp);
  }

  FundamentalPair at(double z) const {
    FundamentalPair p;
    p.zi = zi_;
    p.z = z;
    p.g = g_(z);
    p.g_prime = gp_(z);
    p.h = h_(z);
    p.h_prime = hp_(z);
    return p;
  }

  double zi() const { return zi_; }

private:
  double zi_;
  CubicSpline g_, gp_, h_, hp_;
};

} // namespace lenscope
