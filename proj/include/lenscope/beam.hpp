// SPDX-License-Identifier: Apache-2.0
//
// Beam kinematics in eV-based units: energies and p0*c in eV, lengths in
// mm, fields in tesla. Every sign convention tied to the particle charge
// lives here; downstream modules consume alpha(z) = q B(z) / (2 p0) only
// through the conversion helper below.
#pragma once

#include <cmath>
#include <string>

#include "lenscope/errors.hpp"

namespace lenscope {

namespace constants {
// Electron rest mass energy, eV (0.510 998 95 MeV).
inline constexpr double electron_rest_mass_energy_ev = 0.51099895e6;
// hbar * c in eV nm.
inline constexpr double hbar_c_ev_nm = 197.3269804;
inline constexpr double speed_of_light_m_per_s = 299792458.0;
inline constexpr double nm_per_mm = 1e6;
} // namespace constants

struct BeamKinematics {
  double rest_mass_energy = constants::electron_rest_mass_energy_ev; // eV
  double charge_sign = -1.0; // -1 for the electron
  double kinetic_energy = 0.0; // eV (equals e*U for the voltage branch)
  double p0c = 0.0;            // design momentum times c, eV
  double hbar_c = constants::hbar_c_ev_nm; // eV nm
  bool nonrelativistic = false; // set by the p0^2 = 2 m e U branch

  /// Relativistic constructor from kinetic energy T (eV):
  /// (p0 c)^2 = (mc^2 + T)^2 - (mc^2)^2 = T (T + 2 mc^2).
  static BeamKinematics from_kinetic_energy(
      double T, double rest_mass_energy = constants::electron_rest_mass_energy_ev,
      double charge_sign = -1.0) {
    if (!(T > 0.0))
      throw DomainError("beam: kinetic energy must be positive, got " +
                        std::to_string(T));
    if (!(rest_mass_energy > 0.0))
      throw DomainError("beam: rest mass energy must be positive");
    BeamKinematics b;
    b.rest_mass_energy = rest_mass_energy;
    b.charge_sign = charge_sign;
    b.kinetic_energy = T;
    b.p0c = std::sqrt(T * (T + 2.0 * rest_mass_energy));
    b.nonrelativistic = false;
    return b;
  }

  /// Nonrelativistic constructor from accelerating voltage U (volts):
  /// p0^2 = 2 m e U, i.e. (p0 c)^2 = 2 mc^2 (e U).
  static BeamKinematics from_potential_nonrelativistic(
      double U, double rest_mass_energy = constants::electron_rest_mass_energy_ev,
      double charge_sign = -1.0) {
    if (!(U > 0.0))
      throw DomainError("beam: accelerating voltage must be positive, got " +
                        std::to_string(U));
    if (!(rest_mass_energy > 0.0))
      throw DomainError("beam: rest mass energy must be positive");
    BeamKinematics b;
    b.rest_mass_energy = rest_mass_energy;
    b.charge_sign = charge_sign;
    b.kinetic_energy = U; // eU in eV equals U in volts
    b.p0c = std::sqrt(2.0 * rest_mass_energy * U);
    b.nonrelativistic = true;
    return b;
  }

  /// The single field-to-lens-strength conversion:
  /// alpha = q B / (2 p0) in 1/mm for B in tesla. With q = charge_sign * e
  /// and p0 = (p0 c)/c the elementary charge cancels, leaving
  /// alpha[1/m] = charge_sign * c[m/s] * B[T] / (2 p0c[eV]).
  double alpha_per_mm(double B_tesla) const {
    return charge_sign * constants::speed_of_light_m_per_s * B_tesla /
           (2.0 * p0c) * 1e-3;
  }

  /// de Broglie wavelength lambda = 2 pi hbar / p0, in mm.
  double lambda_db_mm() const {
    return 2.0 * M_PI * (hbar_c / constants::nm_per_mm) / p0c;
  }

  /// p0 c expressed in eV mm units of hbar c, i.e. p0 / hbar in 1/mm.
  /// This is the wavenumber entering every propagator phase.
  double p0_over_hbar_per_mm() const {
    return p0c / (hbar_c / constants::nm_per_mm);
  }
};

} // namespace lenscope
