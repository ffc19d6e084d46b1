// SPDX-License-Identifier: Apache-2.0
//
// Aberration coefficients against hand-integrated constant-field values,
// agreement of the three spherical-aberration expressions across field
// models, and the cubic displacement map pinned term by term.
#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <json.hpp>

#include "lenscope/aberration.hpp"
#include "lenscope/beam.hpp"
#include "lenscope/paraxial.hpp"
#include "lenscope/quadrature.hpp"

using namespace lenscope;

namespace {

BeamKinematics beam100() { return BeamKinematics::from_kinetic_energy(1e5); }

LensStrength glaser_with(double alpha0_a, double a) {
  BeamKinematics b = beam100();
  const double conv = b.alpha_per_mm(1.0);
  const double B0 = alpha0_a / (conv * a);
  return LensStrength(FieldProfile::glaser(B0, a), b);
}

LensStrength uniform_with(double alpha0) {
  BeamKinematics b = beam100();
  return LensStrength(FieldProfile::uniform(alpha0 / b.alpha_per_mm(1.0)), b);
}

LensStrength powerlaw_with(double alpha0_k, int n) {
  BeamKinematics b = beam100();
  const double conv = b.alpha_per_mm(1.0);
  const double B0 = 0.01;
  return LensStrength(
      FieldProfile::power_law(B0, alpha0_k / (conv * B0), n), b);
}

// Object-side deltas recovered through an invertible transport: with
// M = -1, f = 1, theta_im = 0 the image map sends (dx, dy) to itself and
// (du, dv) to (du - dx, dv - dy).
struct Delta {
  double x, y, u, v;
};

Delta object_delta(const AberrationSet& ab, const CentroidState& st,
                   DisplacementMode mode = DisplacementMode::classical,
                   const StateCovariance* cov = nullptr) {
  const AberrationDisplacement im =
      aberration_displacement(ab, st, 1.0, -1.0, 1.0, 0.0, mode, cov);
  return {im.dx, im.dy, im.dpx_over_p0 + im.dx, im.dpy_over_p0 + im.dy};
}

void check_close(double got, double want, double tol) {
  CHECK(std::abs(got - want) < tol);
}

} // namespace

TEST_CASE("constant field coefficients over a half period") {
  // With alpha constant the pair is (cos alpha z, sin(alpha z)/alpha) and
  // every integrand reduces to powers of sines and cosines over a half
  // period; int sin^2 = int cos^2 = pi/(2 alpha), int sin^4 = int cos^4 =
  // (3/8) pi/alpha, int sin^2 cos^2 = (1/8) pi/alpha.  The coefficients
  // come out as elementary multiples of pi.
  for (double alpha0 : {0.8, 1.7}) {
    LensStrength ls = uniform_with(alpha0);
    const double z_im = M_PI / alpha0;
    const AberrationSet ab = aberration_coefficients(ls, 0.0, z_im);

    check_close(ab.C, M_PI / (2.0 * alpha0), 1e-8);
    check_close(ab.K, 0.0, 1e-10);
    check_close(ab.k, -M_PI / 2.0, 1e-8);
    check_close(ab.A, -M_PI * alpha0 / 2.0, 1e-8);
    check_close(ab.a_coef, 0.0, 1e-10);
    check_close(ab.F, 3.0 * M_PI * alpha0 / 2.0, 1e-8);
    check_close(ab.D, 0.0, 1e-10);
    check_close(ab.d, -M_PI * alpha0 * alpha0 / 2.0, 1e-8);
    check_close(ab.E, M_PI * alpha0 * alpha0 * alpha0 / 2.0, 1e-8);
    CHECK(ab.z_ob == 0.0);
    CHECK(ab.z_im == z_im);

    // Both alternative spherical forms collapse to the same value here.
    check_close(scherzer_C(ls, 0.0, z_im), ab.C, 1e-8);
    check_close(hawkes_C(ls, 0.0, z_im), ab.C, 1e-8);
  }
}

TEST_CASE("three spherical forms agree on bell-shaped lenses") {
  const double a = 1.0;
  for (double alpha0_a : {std::sqrt(3.0), 3.0}) {
    LensStrength ls = glaser_with(alpha0_a, a);
    const double z_ob = -5.0 * a;
    const double z_im = find_image_plane(ls, z_ob, {z_ob + 0.1, 6.0 * a});

    const AberrationSet ab = aberration_coefficients(ls, z_ob, z_im);
    const double cs = scherzer_C(ls, z_ob, z_im);
    const double ch = hawkes_C(ls, z_ob, z_im);

    CHECK(ab.C > 0.0);
    const double tol = std::max(1e-6 * ab.C, 1e-8);
    CHECK(std::abs(ab.C - cs) < tol);
    CHECK(std::abs(ab.C - ch) < tol);
  }
}

TEST_CASE("three spherical forms agree on a quadratic ramp field") {
  LensStrength ls = powerlaw_with(1.0, 2);
  const double z_im = find_image_plane(ls, 0.0, {0.5, 3.0});

  const AberrationSet ab = aberration_coefficients(ls, 0.0, z_im);
  const double cs = scherzer_C(ls, 0.0, z_im);
  const double ch = hawkes_C(ls, 0.0, z_im);

  CHECK(ab.C > 0.0);
  const double tol = std::max(1e-6 * ab.C, 1e-8);
  CHECK(std::abs(ab.C - cs) < tol);
  CHECK(std::abs(ab.C - ch) < tol);
}

TEST_CASE("three spherical forms agree on a tabulated profile") {
  // A bell-shaped field tabulated finely enough that the interpolated
  // profile is a faithful C^2 function; the equality of the three forms
  // only needs the pair and the strength derivatives to refer to one and
  // the same alpha(z).
  BeamKinematics b = beam100();
  const double a = 10.0;
  const double conv = b.alpha_per_mm(1.0);
  const double B0 = 1.5 / (conv * a);
  std::vector<double> zs, Bs;
  for (double z = -80.0; z <= 80.0 + 1e-9; z += 0.25) {
    zs.push_back(z);
    Bs.push_back(B0 / (1.0 + (z / a) * (z / a)));
  }
  LensStrength ls(FieldProfile::tabulated(zs, Bs), b);

  const double z_ob = -30.0;
  const double z_im = find_image_plane(ls, z_ob, {z_ob + 1.0, 40.0});
  const AberrationSet ab = aberration_coefficients(ls, z_ob, z_im);
  const double cs = scherzer_C(ls, z_ob, z_im);
  const double ch = hawkes_C(ls, z_ob, z_im);

  CHECK(ab.C > 0.0);
  const double tol = std::max(1e-6 * ab.C, 1e-7);
  CHECK(std::abs(ab.C - cs) < tol);
  CHECK(std::abs(ab.C - ch) < tol);
}

TEST_CASE("curvature and astigmatism differ by the strength integral") {
  // Subtracting the two integrands leaves alpha^2 times the squared
  // Wronskian plus 3 alpha^2, so F - A = 2 int alpha^2 dz holds on any
  // conjugate pair.
  const double a = 1.0;
  LensStrength ls = glaser_with(std::sqrt(3.0), a);
  const double z_ob = -5.0 * a;
  const double z_im = find_image_plane(ls, z_ob, {z_ob + 0.1, 6.0 * a});
  const AberrationSet ab = aberration_coefficients(ls, z_ob, z_im);

  QuadratureOptions opts;
  opts.abs_tol = 1e-12;
  const double i2 =
      integrate([&](double z) { return ls.alpha_sq(z); }, z_ob, z_im, opts)
          .value;
  CHECK(std::abs((ab.F - ab.A) - 2.0 * i2) < 1e-7);
}

TEST_CASE("scherzer integrand is pointwise non-negative") {
  const double a = 1.0;
  LensStrength ls = glaser_with(std::sqrt(3.0), a);
  const double z_ob = -5.0 * a;
  const double z_im = find_image_plane(ls, z_ob, {z_ob + 0.1, 6.0 * a});
  for (int i = 0; i <= 50; ++i) {
    const double z = z_ob + (z_im - z_ob) * i / 50.0;
    const FundamentalPair p = pair_between(ls, z_ob, z);
    const auto der = ls.alpha_derivs(z, 1);
    const double al = der[0], alp = der[1];
    const double h2 = p.h * p.h;
    const double val = 2.0 * al * al * al * al * h2 * h2 +
                       h2 * std::pow(p.h * alp + p.h_prime * al, 2) +
                       al * al * h2 * p.h_prime * p.h_prime;
    CHECK(val >= 0.0);
  }
  CHECK(scherzer_C(ls, z_ob, z_im) > 0.0);
}

TEST_CASE("quartic weight matches its doubled-strength variant") {
  // Writing the weight with b = 2 alpha multiplies the three terms by 16,
  // 4, and 4; dividing by 48 instead of 12 restores the same function.
  const double a = 1.0;
  LensStrength ls = glaser_with(2.0, a);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uz(-4.0, 4.0);
  for (int i = 0; i < 40; ++i) {
    const double z = uz(rng);
    const auto der = ls.alpha_derivs(z, 2);
    const double al = der[0], alp = der[1], app = der[2];
    const double form_a =
        (16.0 * al * al * al * al - al * app + 5.0 * alp * alp) / 12.0;
    const double b2 = 2.0 * al, b2p = 2.0 * alp, b2pp = 2.0 * app;
    const double form_b =
        (4.0 * b2 * b2 * b2 * b2 - b2 * b2pp + 5.0 * b2p * b2p) / 48.0;
    CHECK(std::abs(form_a - form_b) <= 1e-15 * std::abs(form_a));
  }
}

TEST_CASE("coefficients reject non-conjugate planes") {
  BeamKinematics b = beam100();
  LensStrength drift(FieldProfile::uniform(0.0), b);
  CHECK_THROWS_AS(aberration_coefficients(drift, 0.0, 10.0), NumericError);
  CHECK_THROWS_AS(scherzer_C(drift, 0.0, 10.0), NumericError);
  CHECK_THROWS_AS(hawkes_C(drift, 0.0, 10.0), NumericError);

  LensStrength ls = glaser_with(std::sqrt(3.0), 1.0);
  CHECK_THROWS_AS(aberration_coefficients(ls, -5.0, 5.0), NumericError);

  CHECK_THROWS_AS(aberration_coefficients(ls, -5.0, -5.0), DomainError);
  CHECK_THROWS_AS(aberration_coefficients(ls, -5.0, 2.0, 0.0), DomainError);
}

TEST_CASE("displacement map reproduces each coefficient's terms") {
  const double x = 0.2, y = -0.3, u = 0.15, v = 0.1;
  const double s2 = u * u + v * v;
  const double w = x * u + y * v;
  const double L = x * v - y * u;
  const double r2 = x * x + y * y;
  const CentroidState st{x, y, u, v};

  const std::array<Delta, 9> expected = {{
      {u * s2, v * s2, 0.0, 0.0},
      {2.0 * u * w + x * s2, 2.0 * v * w + y * s2, -u * s2, -v * s2},
      {2.0 * u * L - y * s2, 2.0 * v * L + x * s2, -v * s2, u * s2},
      {2.0 * x * w, 2.0 * y * w, -2.0 * u * w, -2.0 * v * w},
      {x * L - 2.0 * y * w, y * L - 2.0 * x * w, -(u * L + 2.0 * v * w),
       -(v * L + 2.0 * u * w)},
      {u * r2, v * r2, -x * s2, -y * s2},
      {x * r2, y * r2, -(u * r2 + 2.0 * x * w), -(v * r2 + 2.0 * y * w)},
      {-y * r2, x * r2, -(2.0 * x * L + v * r2), -(2.0 * y * L - u * r2)},
      {0.0, 0.0, -x * r2, -y * r2},
  }};

  for (int ci = 0; ci < 9; ++ci) {
    AberrationSet ab;
    double* fields[9] = {&ab.C, &ab.K, &ab.k, &ab.A, &ab.a_coef,
                         &ab.F, &ab.D, &ab.d, &ab.E};
    *fields[ci] = 1.0;
    const Delta got = object_delta(ab, st);
    const Delta want = expected[ci];
    check_close(got.x, want.x, 1e-14 * (1.0 + std::abs(want.x)));
    check_close(got.y, want.y, 1e-14 * (1.0 + std::abs(want.y)));
    check_close(got.u, want.u, 1e-14 * (1.0 + std::abs(want.u)));
    check_close(got.v, want.v, 1e-14 * (1.0 + std::abs(want.v)));
  }
}

TEST_CASE("axial pencil sees only the spherical and coma-rotation terms") {
  AberrationSet ab;
  ab.C = 2.3;
  ab.K = -0.8;
  ab.k = 0.5;
  ab.A = 1.1;
  ab.a_coef = -0.6;
  ab.F = 0.9;
  ab.D = 0.4;
  ab.d = -0.2;
  ab.E = 1.7;

  const double u = 0.02, v = -0.01;
  const double s2 = u * u + v * v;
  const Delta got = object_delta(ab, {0.0, 0.0, u, v});
  check_close(got.x, ab.C * u * s2, 1e-18);
  check_close(got.y, ab.C * v * s2, 1e-18);
  check_close(got.u, -ab.K * u * s2 - ab.k * v * s2, 1e-18);
  check_close(got.v, -ab.K * v * s2 + ab.k * u * s2, 1e-18);

  // Transported to the image side the transverse blur radius scales as
  // |M| C s^3 regardless of the rotation angle.
  const double M = -2.0, f = 5.0, theta = 0.8;
  const AberrationDisplacement im =
      aberration_displacement(ab, {0.0, 0.0, u, v}, 1.0, M, f, theta);
  const double blur = std::hypot(im.dx, im.dy);
  const double want = std::abs(M) * ab.C * std::pow(std::sqrt(s2), 3);
  CHECK(std::abs(blur - want) < 1e-15 * want);
}

TEST_CASE("displacement is exactly cubic in the state") {
  AberrationSet ab;
  ab.C = 1.3;
  ab.K = -0.7;
  ab.k = 0.4;
  ab.A = 0.9;
  ab.a_coef = -1.1;
  ab.F = 2.2;
  ab.D = -0.35;
  ab.d = 0.6;
  ab.E = -1.4;
  const CentroidState st{0.11, -0.07, 0.05, 0.03};
  const double M = -2.5, f = 3.7, theta = 0.6;
  const AberrationDisplacement base =
      aberration_displacement(ab, st, 1.0, M, f, theta);

  for (double s : {2.0, 0.5, -1.0}) {
    const CentroidState scaled{s * st.x, s * st.y, s * st.px_over_p0,
                               s * st.py_over_p0};
    const AberrationDisplacement got =
        aberration_displacement(ab, scaled, 1.0, M, f, theta);
    const double s3 = s * s * s;
    CHECK(got.dx == s3 * base.dx);
    CHECK(got.dy == s3 * base.dy);
    CHECK(got.dpx_over_p0 == s3 * base.dpx_over_p0);
    CHECK(got.dpy_over_p0 == s3 * base.dpy_over_p0);
  }
}

TEST_CASE("on-axis ray suffers no displacement") {
  AberrationSet ab;
  ab.C = 1.0;
  ab.K = 1.0;
  ab.k = 1.0;
  ab.A = 1.0;
  ab.a_coef = 1.0;
  ab.F = 1.0;
  ab.D = 1.0;
  ab.d = 1.0;
  ab.E = 1.0;
  const AberrationDisplacement got =
      aberration_displacement(ab, {0.0, 0.0, 0.0, 0.0}, 1.0, -2.0, 3.0, 0.4);
  CHECK(got.dx == 0.0);
  CHECK(got.dy == 0.0);
  CHECK(got.dpx_over_p0 == 0.0);
  CHECK(got.dpy_over_p0 == 0.0);
}

TEST_CASE("second-moment mode reduces to classical at zero covariance") {
  AberrationSet ab;
  ab.C = 1.3;
  ab.K = -0.7;
  ab.k = 0.4;
  ab.A = 0.9;
  ab.a_coef = -1.1;
  ab.F = 2.2;
  ab.D = -0.35;
  ab.d = 0.6;
  ab.E = -1.4;
  const CentroidState st{0.21, -0.13, 0.08, 0.05};
  const StateCovariance zero{};
  const AberrationDisplacement cl =
      aberration_displacement(ab, st, 1.0, -2.0, 3.0, 0.4);
  const AberrationDisplacement sm = aberration_displacement(
      ab, st, 1.0, -2.0, 3.0, 0.4, DisplacementMode::second_moment, &zero);
  check_close(sm.dx, cl.dx, 1e-14 * (1.0 + std::abs(cl.dx)));
  check_close(sm.dy, cl.dy, 1e-14 * (1.0 + std::abs(cl.dy)));
  check_close(sm.dpx_over_p0, cl.dpx_over_p0,
              1e-14 * (1.0 + std::abs(cl.dpx_over_p0)));
  check_close(sm.dpy_over_p0, cl.dpy_over_p0,
              1e-14 * (1.0 + std::abs(cl.dpy_over_p0)));
}

TEST_CASE("second-moment mode keeps the Gaussian cross terms") {
  // For a Gaussian state the third moment of each cubic monomial is
  // mu_a mu_b mu_c plus the three mean-times-covariance pairings; the
  // expectations below are written out by hand for a spherical-only and
  // a distortion-only set.
  StateCovariance S{};
  S[0][0] = 0.04;
  S[1][1] = 0.09;
  S[2][2] = 0.0025;
  S[3][3] = 0.0016;
  S[0][2] = S[2][0] = 0.003;
  S[1][3] = S[3][1] = -0.002;
  S[0][1] = S[1][0] = 0.001;
  const double mx = 0.3, my = -0.2, mu = 0.12, mv = -0.05;
  const CentroidState st{mx, my, mu, mv};

  {
    AberrationSet ab;
    ab.C = 1.0;
    const Delta got =
        object_delta(ab, st, DisplacementMode::second_moment, &S);
    const double e_u3 = mu * mu * mu + 3.0 * mu * S[2][2];
    const double e_uv2 = mu * mv * mv + mu * S[3][3] + 2.0 * mv * S[2][3];
    const double e_v3 = mv * mv * mv + 3.0 * mv * S[3][3];
    const double e_vu2 = mv * mu * mu + mv * S[2][2] + 2.0 * mu * S[2][3];
    check_close(got.x, e_u3 + e_uv2, 1e-14);
    check_close(got.y, e_v3 + e_vu2, 1e-14);
    check_close(got.u, 0.0, 1e-16);
    check_close(got.v, 0.0, 1e-16);
  }

  {
    AberrationSet ab;
    ab.D = 1.0;
    const Delta got =
        object_delta(ab, st, DisplacementMode::second_moment, &S);
    const double e_x3 = mx * mx * mx + 3.0 * mx * S[0][0];
    const double e_xy2 = mx * my * my + mx * S[1][1] + 2.0 * my * S[0][1];
    check_close(got.x, e_x3 + e_xy2, 1e-14);

    const double e_x2u = mx * mx * mu + mu * S[0][0] + 2.0 * mx * S[0][2];
    const double e_uy2 = mu * my * my + mu * S[1][1] + 2.0 * my * S[1][2];
    const double e_xyv =
        mx * my * mv + mx * S[1][3] + my * S[0][3] + mv * S[0][1];
    check_close(got.u, -(3.0 * e_x2u + e_uy2 + 2.0 * e_xyv), 1e-14);
  }
}

TEST_CASE("displacement input validation") {
  AberrationSet ab;
  ab.C = 1.0;
  const CentroidState st{0.1, 0.0, 0.01, 0.0};
  CHECK_THROWS_AS(aberration_displacement(ab, st, 0.0, -1.0, 1.0, 0.0),
                  DomainError);
  CHECK_THROWS_AS(aberration_displacement(ab, st, 1.0, 0.0, 1.0, 0.0),
                  DomainError);
  CHECK_THROWS_AS(aberration_displacement(ab, st, 1.0, -1.0, 0.0, 0.0),
                  DomainError);
  CHECK_THROWS_AS(
      aberration_displacement(ab, {std::nan(""), 0.0, 0.0, 0.0}, 1.0, -1.0,
                              1.0, 0.0),
      DomainError);
  CHECK_THROWS_AS(aberration_displacement(ab, st, 1.0, -1.0, 1.0, 0.0,
                                          DisplacementMode::second_moment),
                  DomainError);
  StateCovariance bad{};
  bad[0][0] = -1.0;
  CHECK_THROWS_AS(aberration_displacement(ab, st, 1.0, -1.0, 1.0, 0.0,
                                          DisplacementMode::second_moment,
                                          &bad),
                  DomainError);
}

TEST_CASE("third moment decomposition") {
  {
    // Gaussian case: odd central moments vanish.
    const double mean = 1.3, var = 0.49;
    const ThirdMomentDecomposition d =
        third_moment_decomposition(mean, var, 0.0);
    check_close(d.total, mean * mean * mean + 3.0 * mean * var, 1e-14);
    CHECK(d.central_third == 0.0);
  }
  {
    // Skewed discrete distribution: the decomposition must rebuild the
    // raw moment computed directly from the samples.
    const std::array<double, 4> value = {0.1, 0.5, 2.0, 3.7};
    const std::array<double, 4> weight = {0.4, 0.3, 0.2, 0.1};
    double mean = 0.0;
    for (int i = 0; i < 4; ++i) mean += weight[i] * value[i];
    double var = 0.0, c3 = 0.0, raw3 = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double d = value[i] - mean;
      var += weight[i] * d * d;
      c3 += weight[i] * d * d * d;
      raw3 += weight[i] * value[i] * value[i] * value[i];
    }
    const ThirdMomentDecomposition d =
        third_moment_decomposition(mean, var, c3);
    CHECK(std::abs(d.total - raw3) < 1e-10 * std::abs(raw3));
  }
  CHECK_THROWS_AS(third_moment_decomposition(1.0, -0.1, 0.0), DomainError);
  CHECK_THROWS_AS(third_moment_decomposition(std::nan(""), 0.1, 0.0),
                  DomainError);
}

TEST_CASE("aberration set survives the JSON round trip") {
  AberrationSet ab;
  ab.C = 1.25;
  ab.K = -0.5;
  ab.k = 0.75;
  ab.A = 2.5;
  ab.a_coef = -1.5;
  ab.F = 3.25;
  ab.D = -0.125;
  ab.d = 0.375;
  ab.E = -2.25;
  ab.z_ob = -5.0;
  ab.z_im = 0.25;

  const nlohmann::json j = ab;
  CHECK(j.at("C").at("unit").get<std::string>() == "mm");
  CHECK(j.at("K").at("unit").get<std::string>() == "1");
  CHECK(j.at("A").at("unit").get<std::string>() == "1/mm");
  CHECK(j.at("D").at("unit").get<std::string>() == "1/mm^2");
  CHECK(j.at("E").at("unit").get<std::string>() == "1/mm^3");

  const AberrationSet back =
      nlohmann::json::parse(j.dump()).get<AberrationSet>();
  CHECK(back.C == ab.C);
  CHECK(back.K == ab.K);
  CHECK(back.k == ab.k);
  CHECK(back.A == ab.A);
  CHECK(back.a_coef == ab.a_coef);
  CHECK(back.F == ab.F);
  CHECK(back.D == ab.D);
  CHECK(back.d == ab.d);
  CHECK(back.E == ab.E);
  CHECK(back.z_ob == ab.z_ob);
  CHECK(back.z_im == ab.z_im);

  nlohmann::json wrong = j;
  wrong["K"]["unit"] = "mm";
  CHECK_THROWS_AS(wrong.get<AberrationSet>(), DomainError);
}
