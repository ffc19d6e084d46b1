// SPDX-License-Identifier: Apache-2.0
//
// Third-order aberrations of a round magnetic lens between conjugate
// planes: the nine coefficients by quadrature over the fundamental pair,
// two alternative closed expressions for the spherical term, the cubic
// displacement map the coefficients induce at the image plane, and the
// third-moment decomposition needed when beam averages stand in for
// single-ray values.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lenscope/errors.hpp"
#include "lenscope/field.hpp"
#include "lenscope/paraxial.hpp"
#include "lenscope/quadrature.hpp"

namespace lenscope {

/// The nine third-order coefficients between a conjugate pair of planes,
/// expressed in the Larmor rotating frame.  With lengths in mm, C carries
/// mm, K and k are dimensionless, A, a_coef and F carry 1/mm, D and d
/// 1/mm^2, and E 1/mm^3.
struct AberrationSet {
  double C = 0.0;      ///< spherical aberration
  double K = 0.0;      ///< isotropic coma
  double k = 0.0;      ///< anisotropic coma
  double A = 0.0;      ///< isotropic astigmatism
  double a_coef = 0.0; ///< anisotropic astigmatism
  double F = 0.0;      ///< field curvature
  double D = 0.0;      ///< isotropic distortion
  double d = 0.0;      ///< anisotropic distortion
  double E = 0.0;      ///< pocus
  double z_ob = 0.0;   ///< object plane
  double z_im = 0.0;   ///< image plane
};

/// Cubic displacement of a ray at the image plane, relative to its
/// paraxial image point.  Momentum entries are slopes, p / p0.
struct AberrationDisplacement {
  double dx = 0.0;
  double dy = 0.0;
  double dpx_over_p0 = 0.0;
  double dpy_over_p0 = 0.0;
};

/// How averages of products are reduced inside the displacement map.
/// classical factorizes every average into a product of centroid values;
/// second_moment keeps the Gaussian variance cross terms, evaluated from
/// a supplied state covariance.
enum class DisplacementMode { classical, second_moment };

/// Symmetric 4x4 covariance of the object-plane state, component order
/// (x, y, px/p0, py/p0).
using StateCovariance = std::array<std::array<double, 4>, 4>;

namespace detail {

inline bool closed_pair_route(const LensStrength& ls, double zi,
                              double z_lo) {
  switch (ls.profile().model()) {
  case FieldModel::glaser:
  case FieldModel::uniform:
    return true;
  case FieldModel::power_law:
    return ls.profile().power_n() >= 1 && zi == 0.0 && z_lo >= 0.0;
  default:
    return false;
  }
}

// Shared setup for the coefficient quadratures: conjugacy check, choice
// of pair route, and segmented integration with the tolerance split over
// the profile's breakpoints so the summed error stays at quad_tol.
class CoefficientQuad {
public:
  CoefficientQuad(const LensStrength& ls, double z_ob, double z_im,
                  double quad_tol, const char* who)
      : ls_(&ls), z_ob_(z_ob), z_im_(z_im) {
    const std::string name(who);
    if (!std::isfinite(z_ob) || !std::isfinite(z_im) || !(z_im > z_ob))
      throw DomainError(name + ": need finite z_im > z_ob");
    if (!(quad_tol > 0.0))
      throw DomainError(name + ": quad_tol must be positive");

    const FundamentalPair at_im = pair_between(ls, z_ob, z_im);
    const double scale =
        std::max(ls.profile().char_length(), z_im - z_ob);
    if (std::abs(at_im.h) > 1e-8 * scale)
      throw NumericError(name + ": |h(z_im, z_ob)| = " +
                         std::to_string(std::abs(at_im.h)) +
                         " is not zero; the planes are not conjugate");

    if (closed_pair_route(ls, z_ob, z_ob))
      pair_at_ = [&ls, z_ob](double z) { return pair_between(ls, z_ob, z); };
    else {
      dense_.emplace(ls, z_ob, z_ob, z_im, 8001);
      pair_at_ = [this](double z) { return dense_->at(z); };
    }

    cuts_ = ls.profile().breakpoints();
    int n_seg = 1;
    for (double c : cuts_)
      if (c > z_ob && c < z_im) ++n_seg;
    opts_.abs_tol = quad_tol / n_seg;
    opts_.rel_tol = 1e-14;
  }

  CoefficientQuad(const CoefficientQuad&) = delete;
  CoefficientQuad& operator=(const CoefficientQuad&) = delete;

  FundamentalPair pair(double z) const { return pair_at_(z); }
  const LensStrength& strength() const { return *ls_; }

  template <class F>
  double operator()(F&& integrand) const {
    return integrate_segmented(integrand, z_ob_, z_im_, cuts_, opts_).value;
  }

private:
  const LensStrength* ls_;
  double z_ob_, z_im_;
  std::optional<PairInterpolant> dense_;
  std::function<FundamentalPair(double)> pair_at_;
  std::vector<double> cuts_;
  QuadratureOptions opts_;
};

inline double sq(double v) { return v * v; }

/// Field and pair factors entering the coefficient integrands at one
/// plane.  quart is the combination alpha^4 - alpha alpha'' that sits in
/// front of the quartic ray terms.
struct CoefficientNode {
  double g, gp, h, hp;
  double al, al2, al3, app, quart;
};

inline CoefficientNode coefficient_node(const LensStrength& ls,
                                        const FundamentalPair& p, double z) {
  CoefficientNode n;
  n.g = p.g;
  n.gp = p.g_prime;
  n.h = p.h;
  n.hp = p.h_prime;
  const std::vector<double> der = ls.alpha_derivs(z, 2);
  n.al = der[0];
  n.app = der[2];
  n.al2 = n.al * n.al;
  n.al3 = n.al2 * n.al;
  n.quart = n.al2 * n.al2 - n.al * n.app;
  return n;
}

/// The nine coefficient integrands in the order C, K, k, A, a, F, D, d, E
/// with each coefficient's constant prefactor folded in, so integrating a
/// column between conjugate planes reproduces the matching coefficient.
inline std::array<double, 9> coefficient_integrands(const CoefficientNode& n) {
  const double h2 = sq(n.h), hp2 = sq(n.hp);
  const double g2 = sq(n.g), gp2 = sq(n.gp);
  const double ghp = n.gp * n.h + n.g * n.hp;
  std::array<double, 9> out;
  out[0] = 0.5 * (n.quart * h2 * h2 + 2.0 * n.al2 * h2 * hp2 + hp2 * hp2);
  out[1] = 0.5 * (n.quart * n.g * n.h * h2 + n.al2 * ghp * n.h * n.hp +
                  n.gp * n.hp * hp2);
  out[2] = (0.125 * n.app - 0.5 * n.al3) * h2 - 0.5 * n.al * hp2;
  out[3] = 0.5 * (n.quart * sq(n.g * n.h) +
                  2.0 * n.al2 * n.g * n.gp * n.h * n.hp + sq(n.gp * n.hp) -
                  n.al2);
  out[4] = (0.25 * n.app - n.al3) * n.g * n.h - n.al * n.gp * n.hp;
  out[5] = 0.5 * (n.quart * sq(n.g * n.h) +
                  n.al2 * (sq(n.g * n.hp) + sq(n.gp * n.h)) +
                  sq(n.gp * n.hp) + 2.0 * n.al2);
  out[6] = 0.5 * (n.quart * n.g * g2 * n.h + n.al2 * n.g * n.gp * ghp +
                  n.gp * gp2 * n.hp);
  out[7] = (0.125 * n.app - 0.5 * n.al3) * g2 - 0.5 * n.al * gp2;
  out[8] = 0.5 * (n.quart * g2 * g2 + 2.0 * n.al2 * g2 * gp2 + gp2 * gp2);
  return out;
}

} // namespace detail

/// All nine coefficients between the conjugate planes z_ob and z_im by
/// adaptive quadrature, each to quad_tol absolute.  The integrands
/// combine alpha, its second derivative, and the fundamental pair
/// referenced to the object plane; the pair comes from the closed form
/// where the model has one, otherwise from a dense interpolant.  Throws
/// when the planes fail the conjugacy check |h(z_im, z_ob)| < 1e-8 scale.
inline AberrationSet aberration_coefficients(const LensStrength& ls,
                                             double z_ob, double z_im,
                                             double quad_tol = 1e-9) {
  const detail::CoefficientQuad quad(ls, z_ob, z_im, quad_tol,
                                     "aberration_coefficients");

  std::array<double, 9> vals;
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = quad([&](double z) {
      return detail::coefficient_integrands(
          detail::coefficient_node(ls, quad.pair(z), z))[i];
    });

  AberrationSet ab;
  ab.z_ob = z_ob;
  ab.z_im = z_im;
  ab.C = vals[0];
  ab.K = vals[1];
  ab.k = vals[2];
  ab.A = vals[3];
  ab.a_coef = vals[4];
  ab.F = vals[5];
  ab.D = vals[6];
  ab.d = vals[7];
  ab.E = vals[8];

  for (double v : vals)
    if (!std::isfinite(v))
      throw NumericError(
          "aberration_coefficients: non-finite coefficient");
  return ab;
}

/// Uniform samples of the nine coefficient integrands between conjugate
/// planes, columns ordered C, K, k, A, a, F, D, d, E with prefactors
/// folded in.  Feeds plot exports; the coefficients themselves come from
/// aberration_coefficients.
inline std::vector<std::pair<double, std::array<double, 9>>>
aberration_integrand_samples(const LensStrength& ls, double z_ob,
                             double z_im, int planes,
                             double quad_tol = 1e-9) {
  if (planes < 2)
    throw DomainError(
        "aberration_integrand_samples: need at least two planes");
  const detail::CoefficientQuad quad(ls, z_ob, z_im, quad_tol,
                                     "aberration_integrand_samples");
  std::vector<std::pair<double, std::array<double, 9>>> out;
  out.reserve(static_cast<std::size_t>(planes));
  for (int i = 0; i < planes; ++i) {
    const double z = z_ob + (z_im - z_ob) * i / (planes - 1);
    out.emplace_back(z, detail::coefficient_integrands(
                            detail::coefficient_node(ls, quad.pair(z), z)));
  }
  return out;
}

/// Spherical aberration from the manifestly non-negative integrand
/// (1/2) { 2 alpha^4 h^4 + h^2 (h alpha' + h' alpha)^2 + alpha^2 h^2 h'^2 },
/// valid between conjugate planes.
inline double scherzer_C(const LensStrength& ls, double z_ob, double z_im,
                         double quad_tol = 1e-9) {
  const detail::CoefficientQuad quad(ls, z_ob, z_im, quad_tol,
                                     "scherzer_C");
  using detail::sq;
  return 0.5 * quad([&](double z) {
    const FundamentalPair p = quad.pair(z);
    const std::vector<double> der = ls.alpha_derivs(z, 1);
    const double al = der[0], alp = der[1];
    const double h2 = sq(p.h), al2 = sq(al);
    return 2.0 * al2 * al2 * h2 * h2 +
           h2 * sq(p.h * alp + p.h_prime * al) +
           al2 * h2 * sq(p.h_prime);
  });
}

/// Spherical aberration in the compact quartic-weight form
/// (1/12) integral h^4 (16 alpha^4 - alpha alpha'' + 5 alpha'^2),
/// valid between conjugate planes.
inline double hawkes_C(const LensStrength& ls, double z_ob, double z_im,
                       double quad_tol = 1e-9) {
  const detail::CoefficientQuad quad(ls, z_ob, z_im, quad_tol, "hawkes_C");
  using detail::sq;
  return quad([&](double z) {
    const FundamentalPair p = quad.pair(z);
    const std::vector<double> der = ls.alpha_derivs(z, 2);
    const double al = der[0], alp = der[1], app = der[2];
    const double h2 = sq(p.h), al2 = sq(al);
    return h2 * h2 *
           (16.0 * al2 * al2 - al * app + 5.0 * sq(alp)) / 12.0;
  });
}

namespace detail {

// Sparse polynomial in the object-plane state (x, y, u, v), u and v being
// the slopes px/p0 and py/p0.  Only used once, to expand the compact
// displacement expressions into monomial tables.
struct StateMono {
  double c;
  std::array<int, 4> e;
};

struct StatePoly {
  std::vector<StateMono> terms;

  static StatePoly var(int i) {
    StatePoly p;
    StateMono m{1.0, {0, 0, 0, 0}};
    m.e[i] = 1;
    p.terms.push_back(m);
    return p;
  }

  void compress() {
    std::sort(terms.begin(), terms.end(),
              [](const StateMono& l, const StateMono& r) {
                return l.e < r.e;
              });
    std::vector<StateMono> out;
    for (const StateMono& m : terms) {
      if (!out.empty() && out.back().e == m.e)
        out.back().c += m.c;
      else
        out.push_back(m);
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const StateMono& m) { return m.c == 0.0; }),
              out.end());
    terms = std::move(out);
  }
};

inline StatePoly operator+(StatePoly l, const StatePoly& r) {
  l.terms.insert(l.terms.end(), r.terms.begin(), r.terms.end());
  return l;
}

inline StatePoly operator*(double s, StatePoly p) {
  for (StateMono& m : p.terms) m.c *= s;
  return p;
}

inline StatePoly operator-(const StatePoly& l, const StatePoly& r) {
  return l + -1.0 * r;
}

inline StatePoly operator*(const StatePoly& l, const StatePoly& r) {
  StatePoly out;
  for (const StateMono& a : l.terms)
    for (const StateMono& b : r.terms) {
      StateMono m{a.c * b.c, {}};
      for (int i = 0; i < 4; ++i) m.e[i] = a.e[i] + b.e[i];
      out.terms.push_back(m);
    }
  return out;
}

// Monomial tables of the object-side displacement: for each output
// component (dx, dy, dpx/p0, dpy/p0), the cubic polynomial multiplying
// each coefficient in the order C, K, k, A, a, F, D, d, E.
inline const std::array<std::array<StatePoly, 9>, 4>&
displacement_tables() {
  static const std::array<std::array<StatePoly, 9>, 4> tables = [] {
    const StatePoly X = StatePoly::var(0), Y = StatePoly::var(1),
                    U = StatePoly::var(2), V = StatePoly::var(3);
    const StatePoly S2 = U * U + V * V; // squared slope
    const StatePoly W = X * U + Y * V;  // position-slope overlap
    const StatePoly L = X * V - Y * U;  // axial angular momentum / p0
    const StatePoly R2 = X * X + Y * Y;
    const StatePoly zero;

    std::array<std::array<StatePoly, 9>, 4> t;
    t[0] = {U * S2,
            2.0 * (U * W) + X * S2,
            2.0 * (U * L) - Y * S2,
            2.0 * (X * W),
            X * L - 2.0 * (Y * W),
            U * R2,
            X * R2,
            -1.0 * (Y * R2),
            zero};
    t[1] = {V * S2,
            2.0 * (V * W) + Y * S2,
            2.0 * (V * L) + X * S2,
            2.0 * (Y * W),
            Y * L - 2.0 * (X * W),
            V * R2,
            Y * R2,
            X * R2,
            zero};
    t[2] = {zero,
            -1.0 * (U * S2),
            -1.0 * (V * S2),
            -2.0 * (U * W),
            -1.0 * (U * L + 2.0 * (V * W)),
            -1.0 * (X * S2),
            -1.0 * (U * R2 + 2.0 * (X * W)),
            -1.0 * (2.0 * (X * L) + V * R2),
            -1.0 * (X * R2)};
    t[3] = {zero,
            -1.0 * (V * S2),
            U * S2,
            -2.0 * (V * W),
            -1.0 * (V * L + 2.0 * (U * W)),
            -1.0 * (Y * S2),
            -1.0 * (V * R2 + 2.0 * (Y * W)),
            -1.0 * (2.0 * (Y * L) - U * R2),
            -1.0 * (Y * R2)};
    for (auto& row : t)
      for (auto& p : row) p.compress();
    return t;
  }();
  return tables;
}

inline double mono_mean(const StateMono& m,
                        const std::array<double, 4>& mu) {
  double v = m.c;
  for (int i = 0; i < 4; ++i)
    for (int rep = 0; rep < m.e[i]; ++rep) v *= mu[i];
  return v;
}

// Third moment of one cubic monomial under a Gaussian state:
// E[abc] = mu_a mu_b mu_c + mu_a S_bc + mu_b S_ac + mu_c S_ab.
inline double mono_gaussian(const StateMono& m,
                            const std::array<double, 4>& mu,
                            const StateCovariance& S) {
  std::array<int, 3> idx{};
  int n = 0;
  for (int i = 0; i < 4; ++i)
    for (int rep = 0; rep < m.e[i]; ++rep) idx[n++] = i;
  const int a = idx[0], b = idx[1], c = idx[2];
  return m.c * (mu[a] * mu[b] * mu[c] + mu[a] * S[b][c] +
                mu[b] * S[a][c] + mu[c] * S[a][b]);
}

} // namespace detail

/// Third-order displacement at the image plane for a ray (or beam
/// centroid) given at the object plane.  Every term is cubic in the
/// state, so the result scales with the cube of the input.  The object-
/// side deltas are transported through the image map, position rows
/// -M R(theta_im), momentum rows -(1/f) R and -(1/M) R.  Slopes are
/// stored as p/p0 throughout, so p0 only fixes the momentum scale the
/// slopes refer to; it must be positive.  In second_moment mode the
/// symmetric part of the supplied covariance augments each product of
/// centroid values with its Gaussian cross terms.
inline AberrationDisplacement aberration_displacement(
    const AberrationSet& ab, const CentroidState& state_ob, double p0,
    double M, double f, double theta_im,
    DisplacementMode mode = DisplacementMode::classical,
    const StateCovariance* covariance = nullptr) {
  const std::array<double, 9> coef = {ab.C, ab.K, ab.k, ab.A, ab.a_coef,
                                      ab.F, ab.D, ab.d, ab.E};
  for (double v : coef)
    if (!std::isfinite(v))
      throw DomainError("aberration_displacement: non-finite coefficient");
  const std::array<double, 4> mu = {state_ob.x, state_ob.y,
                                    state_ob.px_over_p0,
                                    state_ob.py_over_p0};
  for (double v : mu)
    if (!std::isfinite(v))
      throw DomainError("aberration_displacement: non-finite state");
  if (!(p0 > 0.0) || !std::isfinite(p0))
    throw DomainError("aberration_displacement: p0 must be positive");
  if (!std::isfinite(M) || M == 0.0 || !std::isfinite(f) || f == 0.0 ||
      !std::isfinite(theta_im))
    throw DomainError(
        "aberration_displacement: M, f, theta_im must be finite, M and f "
        "nonzero");

  StateCovariance S{};
  if (mode == DisplacementMode::second_moment) {
    if (covariance == nullptr)
      throw DomainError(
          "aberration_displacement: second_moment mode needs a covariance");
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (!std::isfinite((*covariance)[i][j]))
          throw DomainError(
              "aberration_displacement: non-finite covariance entry");
        S[i][j] = 0.5 * ((*covariance)[i][j] + (*covariance)[j][i]);
      }
    for (int i = 0; i < 4; ++i)
      if (S[i][i] < 0.0)
        throw DomainError(
            "aberration_displacement: covariance diagonal must be "
            "non-negative");
  }

  const auto& tables = detail::displacement_tables();
  std::array<double, 4> delta{};
  for (int out = 0; out < 4; ++out) {
    double acc = 0.0;
    for (int ci = 0; ci < 9; ++ci) {
      double poly = 0.0;
      for (const detail::StateMono& m : tables[out][ci].terms)
        poly += mode == DisplacementMode::classical
                    ? detail::mono_mean(m, mu)
                    : detail::mono_gaussian(m, mu, S);
      acc += coef[ci] * poly;
    }
    delta[out] = acc;
  }

  FundamentalPair image;
  image.zi = ab.z_ob;
  image.z = ab.z_im;
  image.g = -M;
  image.g_prime = -1.0 / f;
  image.h = 0.0;
  image.h_prime = -1.0 / M;
  const TransferMap map = transfer_map(image, theta_im);
  const CentroidState moved =
      apply(map, CentroidState{delta[0], delta[1], delta[2], delta[3]});

  AberrationDisplacement out;
  out.dx = moved.x;
  out.dy = moved.y;
  out.dpx_over_p0 = moved.px_over_p0;
  out.dpy_over_p0 = moved.py_over_p0;
  return out;
}

/// The decomposition of a third raw moment into mean and fluctuation
/// parts, <x^3> = <x>^3 + 3 <x> <(dx)^2> + <(dx)^3>.
struct ThirdMomentDecomposition {
  double mean_cubed = 0.0;
  double mean_times_variance = 0.0; ///< 3 <x> <(dx)^2>
  double central_third = 0.0;
  double total = 0.0;
};

inline ThirdMomentDecomposition
third_moment_decomposition(double mean, double variance, double central3) {
  if (!std::isfinite(mean) || !std::isfinite(variance) ||
      !std::isfinite(central3))
    throw DomainError("third_moment_decomposition: inputs must be finite");
  if (variance < 0.0)
    throw DomainError(
        "third_moment_decomposition: variance must be non-negative");
  ThirdMomentDecomposition d;
  d.mean_cubed = mean * mean * mean;
  d.mean_times_variance = 3.0 * mean * variance;
  d.central_third = central3;
  d.total = d.mean_cubed + d.mean_times_variance + d.central_third;
  return d;
}

inline void to_json(nlohmann::json& j, const AberrationSet& ab) {
  auto entry = [](double v, const char* unit) {
    return nlohmann::json{{"value", v}, {"unit", unit}};
  };
  j = nlohmann::json{
      {"C", entry(ab.C, "mm")},        {"K", entry(ab.K, "1")},
      {"k", entry(ab.k, "1")},         {"A", entry(ab.A, "1/mm")},
      {"a", entry(ab.a_coef, "1/mm")}, {"F", entry(ab.F, "1/mm")},
      {"D", entry(ab.D, "1/mm^2")},    {"d", entry(ab.d, "1/mm^2")},
      {"E", entry(ab.E, "1/mm^3")},    {"z_ob", entry(ab.z_ob, "mm")},
      {"z_im", entry(ab.z_im, "mm")},
  };
}

inline void from_json(const nlohmann::json& j, AberrationSet& ab) {
  auto value = [&j](const char* key, const char* unit) {
    const nlohmann::json& e = j.at(key);
    if (e.at("unit").get<std::string>() != unit)
      throw DomainError(std::string("AberrationSet: field ") + key +
                        " must carry unit " + unit);
    return e.at("value").get<double>();
  };
  ab.C = value("C", "mm");
  ab.K = value("K", "1");
  ab.k = value("k", "1");
  ab.A = value("A", "1/mm");
  ab.a_coef = value("a", "1/mm");
  ab.F = value("F", "1/mm");
  ab.D = value("D", "1/mm^2");
  ab.d = value("d", "1/mm^2");
  ab.E = value("E", "1/mm^3");
  ab.z_ob = value("z_ob", "mm");
  ab.z_im = value("z_im", "mm");
}

} // namespace lenscope
