#pragma once

// Period-averaged ("adiabatic") model of an ion flying over the grating.
//
// In the frame co-moving with the beam and rotating at the Doppler frequency
// kappa v_z0 about x, the bias plus first grating harmonic is static and the
// spin precesses about n' = (Omega0' x + Omega1(y) z) / Omega~(y) with
//   Omega0' = Omega0 - kappa v_z0,  Omega~ = sqrt(Omega0'^2 + Omega1(y)^2).
// Averaging the fast motion over one grating period leaves a planar system
// for (y, v_y, v_z) with the vertical acceleration
//   a_y = omega0 v_z + a_im(y) + omega1(y)^2 / (2 kappa)
//       + u omega1(y) (Omega1(y) / Omega~(y)) S_x0
// and dv_z/dt = -omega0 v_y.

#include <optional>
#include <vector>

#include "sgbeam/constants.hpp"
#include "sgbeam/dynamics.hpp"
#include "sgbeam/fields.hpp"
#include "sgbeam/forces.hpp"
#include "sgbeam/types.hpp"

namespace sgbeam {

struct AdiabaticParams {
  double Omega0 = 0.0;  // Larmor frequency of the bias (rad/s)
  double Omega1 = 0.0;  // Larmor frequency of the first harmonic at y = 0 (rad/s)
  double omega0 = 0.0;  // cyclotron frequency of the bias (rad/s)
  double omega1 = 0.0;  // cyclotron frequency of the first harmonic at y = 0 (rad/s)
  double kappa = 0.0;   // 1/m
  double vz0 = 0.0;     // reference axial speed for the Doppler shift (m/s)
  double u = 0.0;       // g mu_B kappa / e (m/s)
  double Sx0 = 0.5;     // initial spin projection on the bias axis
  bool dynamic_doppler = false;  // use the current v_z in Omega0' instead of vz0

  /// Bias B0 along x, first-harmonic amplitude B1 at the top wire surface.
  static AdiabaticParams from_fields(double B0, double B1, double kappa, double vz0,
                                     double Sx0, const Ion& ion = Ion::calcium40());

  /// Same with B1 and kappa taken from the grating's first harmonic.
  static AdiabaticParams from_grating(double B0, const GratingParams& grating, double vz0,
                                      double Sx0, const Ion& ion = Ion::calcium40());

  /// Omega0 - kappa v_z.
  double doppler_shifted_larmor(double vz) const { return Omega0 - kappa * vz; }
  double doppler_shifted_larmor() const { return doppler_shifted_larmor(vz0); }

  /// Copy with the opposite spin projection.
  AdiabaticParams with_spin(double sx) const {
    AdiabaticParams p = *this;
    p.Sx0 = sx;
    return p;
  }

  /// Throws std::invalid_argument when Omega~ could vanish (Omega0' = 0 with
  /// the grating off) or kappa <= 0.
  void validate() const;
};

struct EffectivePrecession {
  double Omega_tilde = 0.0;  // rad/s, > 0
  Vec3 axis = Vec3::UnitX(); // unit vector in the rotating frame (x', y', z')
};

/// Precession frequency and axis at height y. `vz` overrides vz0 when the
/// dynamic Doppler option is on.
EffectivePrecession effective_precession(double y, const AdiabaticParams& p,
                                         std::optional<double> vz = std::nullopt);

/// Rotating-frame spin S' = n' (n' . S'), with the projection fixed by the
/// initial alignment along the bias: n' . S' = sign(Omega0') S_x0.
Vec3 adiabatic_spin(double y, const AdiabaticParams& p, std::optional<double> vz = std::nullopt);

/// omega1(y) / kappa, the amplitude of v_x oscillating at the Doppler frequency.
double transverse_wiggle_amplitude(double y, const AdiabaticParams& p);

struct AccelTerms {
  double lorentz = 0.0;        // omega0 v_z
  double image = 0.0;          // -e^2 / (16 pi eps0 m h^2)
  double ponderomotive = 0.0;  // omega1(y)^2 / (2 kappa)
  double stern_gerlach = 0.0;  // u omega1(y) S_z'(y)
  double total() const { return lorentz + image + ponderomotive + stern_gerlach; }
};

/// Four terms of the averaged vertical acceleration. Throws DomainError for
/// y <= 0 (or at/below the image plane when the image is enabled).
AccelTerms averaged_accel_terms(double y, double vz, const AdiabaticParams& p,
                                const ImageParams& image, const Ion& ion = Ion::calcium40());

double averaged_accel_y(double y, double vz, const AdiabaticParams& p, const ImageParams& image,
                        const Ion& ion = Ion::calcium40());

/// kappa |Omega0'| Omega1(y) |v_y| / Omega~^3, the rotation rate of n' in
/// units of the precession frequency.
double adiabaticity_parameter(double y, double vy, const AdiabaticParams& p,
                              std::optional<double> vz = std::nullopt);

/// Threshold above which the adiabatic approximation is flagged.
inline constexpr double kAdiabaticityLimit = 0.1;

// ---------------------------------------------------------------------------
// Closed-form vertical motion
// ---------------------------------------------------------------------------

/// Launch condition of the reduced system.
struct ReducedLaunch {
  double y = 0.0;   // m
  double vy = 0.0;  // m/s
  double vz = 0.0;  // m/s
};

/// v_y^2 / 2 at height y reached from the launch, using v_z(y) = v_z - omega0 (y - y_L).
/// Exact for the averaged system with the frozen Doppler shift.
double vertical_energy(double y, const ReducedLaunch& launch, const AdiabaticParams& p,
                       const ImageParams& image, const Ion& ion = Ion::calcium40());

/// Closest approach of a descending launch (v_y < 0): the highest root of
/// vertical_energy below the launch height. Empty when the ion reaches
/// `floor` (crash). A launch with v_y >= 0 returns its own height.
std::optional<double> turning_point(const ReducedLaunch& launch, const AdiabaticParams& p,
                                    const ImageParams& image, double floor,
                                    const Ion& ion = Ion::calcium40());

/// Highest height below `y_start` where averaged_accel_y(y, vz) = 0, i.e.
/// the top of the surface barrier. Empty if the acceleration does not
/// change sign above `floor`.
std::optional<double> static_balance_height(double vz, const AdiabaticParams& p,
                                            const ImageParams& image, double y_start,
                                            double floor, const Ion& ion = Ion::calcium40());

/// Minimum bias e / (16 pi eps0 y^2 v_z) for which the Lorentz term beats
/// the image attraction at height y.
double crash_bias_minimum(double vz, double y, double charge = codata::elementary_charge);

// ---------------------------------------------------------------------------
// Reduced integrator
// ---------------------------------------------------------------------------

struct AdiabaticSample {
  double t = 0.0;
  double y = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double z = 0.0;
  AccelTerms terms;
};

struct AdiabaticTrajectory {
  std::vector<AdiabaticSample> samples;
  TrajectoryStatus status = TrajectoryStatus::CompletedWindow;
  double min_height = 0.0;
  double max_adiabaticity = 0.0;
  bool adiabaticity_violated = false;
  long accepted_steps = 0;
  std::string message;

  const AdiabaticSample& final() const { return samples.back(); }
};

/// Options for the reduced engine: same semantics as the full integrator
/// but with a coarser default step, since no spin precession is resolved.
IntegratorOptions adiabatic_default_options();

/// Integrates (y, v_y, v_z, z) from t = 0 with z = 0 at launch.
AdiabaticTrajectory integrate_adiabatic(const ReducedLaunch& launch, const AdiabaticParams& p,
                                        const ImageParams& image, const IntegratorOptions& opts,
                                        const Ion& ion = Ion::calcium40());

}  // namespace sgbeam
