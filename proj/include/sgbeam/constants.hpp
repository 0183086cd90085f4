#pragma once

// Physical constants in SI units (CODATA 2018 recommended values, with the
// 2019 SI exact definitions for e and h).

namespace sgbeam {
namespace codata {

inline constexpr double pi = 3.14159265358979323846;

inline constexpr double elementary_charge = 1.602176634e-19;     // C (exact)
inline constexpr double reduced_planck = 1.054571817e-34;        // J s
inline constexpr double bohr_magneton = 9.2740100783e-24;        // J/T
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // T m/A
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double electron_mass = 9.1093837015e-31;        // kg
inline constexpr double atomic_mass_unit = 1.66053906660e-27;    // kg

}  // namespace codata

/// Electron spin g-factor used throughout (magnitude, dimensionless).
inline constexpr double kElectronGFactor = 2.00232;

/// Mass of the 40Ca+ ion as used for all beam estimates: 39.96 amu.
inline constexpr double kCalcium40Mass = 39.96 * codata::atomic_mass_unit;

struct PhysicalConstants {
  double elementary_charge = codata::elementary_charge;
  double reduced_planck = codata::reduced_planck;
  double bohr_magneton = codata::bohr_magneton;
  double vacuum_permeability = codata::vacuum_permeability;
  double vacuum_permittivity = codata::vacuum_permittivity;
  double electron_mass = codata::electron_mass;
  double electron_g_factor = kElectronGFactor;
  double ca40_mass = kCalcium40Mass;
};

inline constexpr PhysicalConstants kConstants{};

/// Charged particle carrying a single unpaired electron spin.
///
/// The g-factor lives here rather than in the constant table so that a run
/// configuration can override it (e.g. g = 2 for quick estimates).
struct Ion {
  double mass = kCalcium40Mass;
  double charge = codata::elementary_charge;
  double g_factor = kElectronGFactor;

  static constexpr Ion calcium40() { return Ion{}; }

  /// Magnitude of the spin magnetic moment prefactor g mu_B (J/T).
  constexpr double moment() const { return g_factor * codata::bohr_magneton; }

  /// Gyromagnetic ratio g mu_B / hbar (rad s^-1 T^-1).
  constexpr double gyromagnetic_ratio() const {
    return moment() / codata::reduced_planck;
  }
};

}  // namespace sgbeam
