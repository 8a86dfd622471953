#pragma once

// Internal unit system: lengths in Angstrom, energies in Kelvin (times an
// optional energy_scale, so "1000" means millikelvin).

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "phstat/error.hpp"

namespace phstat {

namespace codata {
// CODATA 2018 recommended values (SI). k_B and e are exact by definition.
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double boltzmann = 1.380649e-23;       // J / K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double bohr_radius_angstrom = 0.529177210903; // A
}  // namespace codata

namespace masses {
// AME2016 atomic mass of 87Rb, in u.
inline constexpr double rubidium87 = 86.909180527;
}  // namespace masses

struct UnitSystem {
  std::string species;
  double mass_u = 0.0;
  /// hbar^2 / m in (energy unit) * A^2; the kinetic prefactor of the
  /// relative-motion equations, where the Jacobi scaling absorbs the 1/2.
  double hbar2_over_m = 0.0;
  double bohr_to_angstrom = codata::bohr_radius_angstrom;
  /// eV expressed in the internal energy unit.
  double ev_to_energy = codata::elementary_charge / codata::boltzmann;
  /// Internal energy units per Kelvin.
  double energy_scale = 1.0;

  double bohr_to_length(double a0) const { return a0 * bohr_to_angstrom; }
  double length_to_bohr(double angstrom) const { return angstrom / bohr_to_angstrom; }
  double ev_to_internal(double ev) const { return ev * ev_to_energy; }
  double internal_to_ev(double e) const { return e / ev_to_energy; }
  double kelvin_to_internal(double k) const { return k * energy_scale; }
  double internal_to_kelvin(double e) const { return e / energy_scale; }
};

inline double hbar2_over_m_kelvin_a2(double mass_u) {
  const double m = mass_u * codata::atomic_mass_unit;
  return codata::hbar * codata::hbar / (m * codata::boltzmann) * 1e20;
}

/// Known species are "Rb87" (aliases "87Rb", "rb87"). Any other name needs
/// an explicit mass in u.
inline UnitSystem make_units(std::string_view species,
                             std::optional<double> mass_u = std::nullopt,
                             double energy_scale = 1.0) {
  if (!(energy_scale > 0.0) || !std::isfinite(energy_scale))
    throw ConfigError("make_units: energy_scale must be positive");
  double mass = 0.0;
  if (mass_u) {
    if (!(*mass_u > 0.0)) throw ConfigError("make_units: mass must be positive");
    mass = *mass_u;
  } else if (species == "Rb87" || species == "87Rb" || species == "rb87") {
    mass = masses::rubidium87;
  } else {
    throw ConfigError("make_units: unknown species '" + std::string(species) +
                      "' and no mass given");
  }
  UnitSystem u;
  u.species = std::string(species);
  u.mass_u = mass;
  u.energy_scale = energy_scale;
  u.hbar2_over_m = hbar2_over_m_kelvin_a2(mass) * energy_scale;
  u.ev_to_energy = codata::elementary_charge / codata::boltzmann * energy_scale;
  return u;
}

}  // namespace phstat
