#pragma once

#include "sgbeam/constants.hpp"

namespace sgbeam {

/// Non-relativistic speed sqrt(2E/m). Energy in joules (use units::eV to
/// convert), mass in kg. Throws std::domain_error for non-positive input.
double kinetic_energy_to_speed(double energy, double mass);

/// Inverse of kinetic_energy_to_speed: m v^2 / 2 in joules.
double speed_to_kinetic_energy(double speed, double mass);

/// Spin precession (Larmor) angular frequency g mu_B B / hbar in rad/s.
double larmor_frequency(double field, double g_factor = kElectronGFactor);

/// Cyclotron angular frequency q B / m in rad/s.
double cyclotron_frequency(double field, double mass,
                           double charge = codata::elementary_charge);

}  // namespace sgbeam
