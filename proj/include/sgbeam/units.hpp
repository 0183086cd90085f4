#pragma once

#include "sgbeam/constants.hpp"

// Multiply a value in the named unit by the factor to obtain SI.
//   double B = 20 * units::gauss;   // tesla
//   double L = 100 * units::um;     // metre

namespace sgbeam::units {

inline constexpr double m = 1.0;
inline constexpr double mm = 1e-3;
inline constexpr double um = 1e-6;
inline constexpr double nm = 1e-9;

inline constexpr double s = 1.0;
inline constexpr double ms = 1e-3;
inline constexpr double us = 1e-6;
inline constexpr double ns = 1e-9;

inline constexpr double tesla = 1.0;
inline constexpr double mT = 1e-3;
inline constexpr double gauss = 1e-4;

inline constexpr double ampere = 1.0;
inline constexpr double mA = 1e-3;
inline constexpr double uA = 1e-6;

inline constexpr double rad = 1.0;
inline constexpr double mrad = 1e-3;
inline constexpr double urad = 1e-6;

inline constexpr double joule = 1.0;
inline constexpr double eV = codata::elementary_charge;
inline constexpr double meV = 1e-3 * eV;
inline constexpr double ueV = 1e-6 * eV;
inline constexpr double keV = 1e3 * eV;

inline constexpr double m_per_s = 1.0;
inline constexpr double km_per_s = 1e3;

inline constexpr double kg = 1.0;
inline constexpr double amu = codata::atomic_mass_unit;

}  // namespace sgbeam::units
