#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "sgbeam/constants.hpp"
#include "sgbeam/kinematics.hpp"
#include "sgbeam/units.hpp"

using namespace sgbeam;

TEST(Constants, CalciumMassIs3996Amu) {
  EXPECT_DOUBLE_EQ(kConstants.ca40_mass, 39.96 * 1.66053906660e-27);
  EXPECT_DOUBLE_EQ(Ion::calcium40().mass, kCalcium40Mass);
}

TEST(Constants, MomentAndGyromagneticRatio) {
  const Ion ion = Ion::calcium40();
  EXPECT_DOUBLE_EQ(ion.moment(), 2.00232 * 9.2740100783e-24);
  // 2.8025 MHz per gauss for g = 2.00232.
  EXPECT_NEAR(ion.gyromagnetic_ratio() * 1e-4 / (2 * codata::pi), 2.8025e6, 1e3);
}

TEST(Kinematics, TenthOfAnElectronVoltIsAbout700MetresPerSecond) {
  const double v = kinetic_energy_to_speed(0.1 * units::eV, kCalcium40Mass);
  EXPECT_NEAR(v, 694.9, 0.5);
  EXPECT_NEAR(speed_to_kinetic_energy(v, kCalcium40Mass) / units::eV, 0.1, 1e-14);
}

TEST(Kinematics, RejectsNonPositiveInputs) {
  EXPECT_THROW(kinetic_energy_to_speed(0.0, kCalcium40Mass), std::domain_error);
  EXPECT_THROW(kinetic_energy_to_speed(1.0, -1.0), std::domain_error);
  EXPECT_THROW(larmor_frequency(-1.0), std::domain_error);
  EXPECT_THROW(cyclotron_frequency(1.0, 0.0), std::domain_error);
}

TEST(Kinematics, FrequenciesAtTwentyGauss) {
  // Larmor 2 pi x 56 MHz, cyclotron 4829 rad/s.
  EXPECT_NEAR(larmor_frequency(20 * units::gauss) / (2 * codata::pi), 56.05e6, 0.05e6);
  EXPECT_NEAR(cyclotron_frequency(20 * units::gauss, kCalcium40Mass), 4829.1, 0.5);
}

TEST(Kinematics, LinearInField) {
  const double B = 0.37;
  EXPECT_NEAR(larmor_frequency(2 * B), 2 * larmor_frequency(B), 1e-6);
  EXPECT_NEAR(cyclotron_frequency(3 * B, 1e-25), 3 * cyclotron_frequency(B, 1e-25), 1e-9);
}

TEST(Units, ConversionFactors) {
  EXPECT_DOUBLE_EQ(1e4 * units::gauss, 1.0);
  EXPECT_DOUBLE_EQ(1e6 * units::um, 1.0);
  EXPECT_DOUBLE_EQ(units::ueV, 1e-6 * 1.602176634e-19);
}
