#include "sgbeam/kinematics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sgbeam {

double kinetic_energy_to_speed(double energy, double mass) {
  if (!(energy > 0.0)) {
    throw std::domain_error("kinetic_energy_to_speed: energy must be positive, got " +
                            std::to_string(energy));
  }
  if (!(mass > 0.0)) {
    throw std::domain_error("kinetic_energy_to_speed: mass must be positive");
  }
  return std::sqrt(2.0 * energy / mass);
}

double speed_to_kinetic_energy(double speed, double mass) {
  if (!(mass > 0.0)) {
    throw std::domain_error("speed_to_kinetic_energy: mass must be positive");
  }
  return 0.5 * mass * speed * speed;
}

double larmor_frequency(double field, double g_factor) {
  if (field < 0.0) {
    throw std::domain_error("larmor_frequency: field magnitude must be >= 0");
  }
  return g_factor * codata::bohr_magneton * field / codata::reduced_planck;
}

double cyclotron_frequency(double field, double mass, double charge) {
  if (!(mass > 0.0)) {
    throw std::domain_error("cyclotron_frequency: mass must be positive");
  }
  if (field < 0.0) {
    throw std::domain_error("cyclotron_frequency: field magnitude must be >= 0");
  }
  return charge * field / mass;
}

}  // namespace sgbeam
