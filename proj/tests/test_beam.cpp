// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lenscope/beam.hpp"

using namespace lenscope;

namespace {
constexpr double mc2 = constants::electron_rest_mass_energy_ev;
}

TEST_CASE("kinetic-energy constructor satisfies the energy relation") {
  for (double T : {1.0, 1e3, 1e5, 3e6, 1e9}) {
    BeamKinematics b = BeamKinematics::from_kinetic_energy(T);
    const double E = mc2 + T;
    CAPTURE(T);
    CHECK(std::abs(b.p0c * b.p0c - (E * E - mc2 * mc2)) <=
          4e-16 * E * E);
    CHECK(b.kinetic_energy == T); // round trip
    CHECK_FALSE(b.nonrelativistic);
  }
}

TEST_CASE("p0 is strictly monotonic in the kinetic energy") {
  double prev = 0.0;
  for (double T = 10.0; T < 1e8; T *= 3.7) {
    BeamKinematics b = BeamKinematics::from_kinetic_energy(T);
    CHECK(b.p0c > prev);
    prev = b.p0c;
  }
}

TEST_CASE("nonrelativistic limit of the relativistic branch") {
  // p0c -> sqrt(2 mc^2 T) as T -> 0.
  for (double T : {1e-3, 1e-1, 1.0}) {
    BeamKinematics b = BeamKinematics::from_kinetic_energy(T);
    const double limit = std::sqrt(2.0 * mc2 * T);
    CHECK(std::abs(b.p0c - limit) <= (T / mc2) * limit);
  }
}

TEST_CASE("T equal to the rest energy gives p0c = sqrt(3) mc2") {
  BeamKinematics b = BeamKinematics::from_kinetic_energy(mc2);
  CHECK(b.p0c == Catch::Approx(std::sqrt(3.0) * mc2).epsilon(1e-15));
}

TEST_CASE("100 keV electron against an extended-precision evaluation") {
  BeamKinematics b = BeamKinematics::from_kinetic_energy(1e5);
  const long double Tl = 1e5L;
  const long double ml = 0.51099895e6L;
  const long double ref = sqrtl(Tl * (Tl + 2.0L * ml));
  CHECK(std::abs(b.p0c - static_cast<double>(ref)) <= 1e-12 * b.p0c);
  // Frozen independent evaluation of the same closed form.
  CHECK(b.p0c == Catch::Approx(334962.37102098498).epsilon(1e-14));
}

TEST_CASE("voltage branch momentum and flags") {
  const double U = 1e4;
  BeamKinematics b = BeamKinematics::from_potential_nonrelativistic(U);
  CHECK(b.nonrelativistic);
  CHECK(b.kinetic_energy == U);
  CHECK(b.p0c == Catch::Approx(std::sqrt(2.0 * mc2 * U)).epsilon(1e-15));

  // eU = mc^2/2 makes (p0c)^2 = (mc^2)^2 exactly.
  BeamKinematics half = BeamKinematics::from_potential_nonrelativistic(mc2 / 2.0);
  CHECK(half.p0c * half.p0c == Catch::Approx(mc2 * mc2).epsilon(1e-15));
}

TEST_CASE("relativistic correction factor between the two branches") {
  // (p0_rel / p0_nr)^2 = 1 + eU/(2 mc^2) exactly for this pair of formulas.
  for (double U : {100.0, 1e4, 1e6}) {
    BeamKinematics rel = BeamKinematics::from_kinetic_energy(U);
    BeamKinematics nr = BeamKinematics::from_potential_nonrelativistic(U);
    const double ratio_sq = (rel.p0c / nr.p0c) * (rel.p0c / nr.p0c);
    CHECK(std::abs(ratio_sq - (1.0 + U / (2.0 * mc2))) <= 1e-13);
  }
}

TEST_CASE("branches converge at vanishing voltage") {
  const double U = 1e-6 * mc2 * 0.5; // eU/mc^2 = 5e-7
  BeamKinematics rel = BeamKinematics::from_kinetic_energy(U);
  BeamKinematics nr = BeamKinematics::from_potential_nonrelativistic(U);
  CHECK(std::abs(rel.p0c - nr.p0c) / rel.p0c < 1e-6);
}

TEST_CASE("lens-strength conversion constant") {
  BeamKinematics b = BeamKinematics::from_kinetic_energy(1e5);
  // Frozen: -c/(2 p0c) * 1e-3 for B = 1 T at 100 keV.
  CHECK(b.alpha_per_mm(1.0) ==
        Catch::Approx(-0.447501695617652482).epsilon(1e-14));
  // Electron charge sign makes alpha negative for positive B.
  CHECK(b.alpha_per_mm(0.01) < 0.0);
  BeamKinematics pos = BeamKinematics::from_kinetic_energy(1e5, mc2, +1.0);
  CHECK(pos.alpha_per_mm(0.01) > 0.0);
}

TEST_CASE("alpha squared equals eB^2/8mU on the voltage branch") {
  // Independent SI evaluation with CODATA constants.
  const double e_C = 1.602176634e-19;
  const double c = 299792458.0;
  const double me_kg = mc2 * e_C / (c * c);
  const double U = 25e3;
  const double B = 0.015;

  BeamKinematics b = BeamKinematics::from_potential_nonrelativistic(U);
  const double alpha_mm = b.alpha_per_mm(B);
  const double alpha2_si = e_C * B * B / (8.0 * me_kg * U); // 1/m^2
  CHECK(std::abs(alpha_mm * alpha_mm - alpha2_si * 1e-6) <=
        1e-12 * alpha2_si * 1e-6);
}

TEST_CASE("de Broglie wavelength at 100 keV") {
  BeamKinematics b = BeamKinematics::from_kinetic_energy(1e5);
  CHECK(b.lambda_db_mm() ==
        Catch::Approx(3.70143661265676795e-9).epsilon(1e-14));
  CHECK(b.p0_over_hbar_per_mm() ==
        Catch::Approx(2.0 * M_PI / b.lambda_db_mm()).epsilon(1e-14));
}

TEST_CASE("constructor domain errors") {
  CHECK_THROWS_AS(BeamKinematics::from_kinetic_energy(0.0), DomainError);
  CHECK_THROWS_AS(BeamKinematics::from_kinetic_energy(-5.0), DomainError);
  CHECK_THROWS_AS(BeamKinematics::from_kinetic_energy(1e5, -1.0), DomainError);
  CHECK_THROWS_AS(BeamKinematics::from_potential_nonrelativistic(0.0),
                  DomainError);
  CHECK_THROWS_AS(BeamKinematics::from_potential_nonrelativistic(-10.0),
                  DomainError);
}
