#pragma once

// Monte Carlo beams: source sampling, focusing onto a closest-approach height,
// batch integration and per-spin statistics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgbeam/adiabatic.hpp"
#include "sgbeam/constants.hpp"
#include "sgbeam/dynamics.hpp"
#include "sgbeam/fields.hpp"
#include "sgbeam/forces.hpp"
#include "sgbeam/types.hpp"

namespace sgbeam {

enum class SpinPreparation { PlusX, MinusX, PlusY, MinusY, MixedX };

const char* to_string(SpinPreparation s);
SpinPreparation parse_spin_preparation(const std::string& s);

/// Spin of ion `index` for the given preparation. MixedX alternates +x/2
/// (even) and -x/2 (odd) so both populations share their kinematic draws.
Vec3 prepared_spin(SpinPreparation s, std::size_t index);

struct SourceParams {
  double mean_speed = 0.0;    // m/s
  double axial_spread = 0.0;  // sigma of the speed (m/s)
  double divergence = 0.0;    // sigma of each transverse angle (rad)
  double emittance_1d = 0.0;  // m rad sqrt(J)
  SpinPreparation spin = SpinPreparation::MixedX;
  double spread_scale = 1.0;  // multiplies both spreads (0.7: the narrowed beam)
  std::optional<double> waist;  // transverse position sigma (m); default from emittance

  double effective_axial_spread() const { return axial_spread * spread_scale; }
  double effective_divergence() const { return divergence * spread_scale; }

  /// Position sigma: `waist` if set, else eta / (sqrt(E) dtheta) with the
  /// effective divergence, and zero for a parallel beam.
  double position_spread(const Ion& ion = Ion::calcium40()) const;

  /// Throws std::invalid_argument for negative spreads, a non-positive
  /// speed or an emittance below hbar / sqrt(8 m).
  void validate(const Ion& ion = Ion::calcium40()) const;

  bool operator==(const SourceParams&) const = default;
};

/// Where the beam centre starts: height above the surface, downward
/// incidence angle in the y-z plane, and the axial position of the waist.
struct LaunchFrame {
  double height = 0.0;     // m
  double incidence = 0.0;  // rad below the +z axis
  double x = 0.0;          // m
  double z = 0.0;          // m

  void validate() const;
};

/// Independent Gaussian draws of speed, both transverse angles and both
/// transverse positions. Ion i uses its own generator seeded from (seed, i),
/// so the draws do not depend on n or on the execution order.
std::vector<IonState> sample_initial_states(const SourceParams& src, const LaunchFrame& frame,
                                            std::size_t n, std::uint64_t seed,
                                            const Ion& ion = Ion::calcium40());

struct FocusSpec {
  double target = 0.0;     // closest approach y* (m)
  double tolerance = 0.0;  // half width of the accepted band (m)
  bool enabled = false;

  void validate() const;

  bool operator==(const FocusSpec&) const = default;
};

/// Sampled ions whose launch heights are moved so that the closed-form
/// adiabatic turning point of each (with its own speed, angle and spin) is
/// the target. The position jitter of the waist is added afterwards.
/// `p` supplies the bias and grating; its Sx0 and vz0 are replaced per ion.
/// Throws std::invalid_argument when the target cannot be reached, naming
/// the violated condition.
std::vector<IonState> focus_initial_states(const SourceParams& src, const LaunchFrame& frame,
                                           const FocusSpec& focus, const AdiabaticParams& p,
                                           const ImageParams& image, std::size_t n,
                                           std::uint64_t seed,
                                           const Ion& ion = Ion::calcium40());

/// Launch height from which a descent with (v_y < 0, v_z) turns at `target`.
/// Empty if the target is at or below the barrier top.
std::optional<double> focused_launch_height(double target, double vy, double vz,
                                            const AdiabaticParams& p, const ImageParams& image,
                                            const Ion& ion = Ion::calcium40());

// ---------------------------------------------------------------------------
// Batch execution
// ---------------------------------------------------------------------------

enum class Engine { Full, Adiabatic };

const char* to_string(Engine e);
Engine parse_engine(const std::string& s);

/// Plane in which the spin splitting is measured: Vertical uses
/// atan2(v_y, v_z), Horizontal atan2(v_x, v_z).
enum class SplitPlane { Vertical, Horizontal };

struct EnsembleSetup {
  Engine engine = Engine::Adiabatic;
  FieldModelPtr field;                     // required by the full engine
  std::optional<AdiabaticParams> adiabatic; // required by the adiabatic engine
  ImageParams image;
  IntegratorOptions options;
  SplitPlane plane = SplitPlane::Vertical;
  int workers = 0;  // 0: default_worker_count()
  Ion ion = Ion::calcium40();
};

/// SGBEAM_WORKERS if set to a positive integer, else the hardware concurrency.
int default_worker_count();

struct IonRecord {
  std::size_t index = 0;
  IonState initial;
  IonState final;
  double closest_approach = 0.0;  // minimum y (m)
  double angle = 0.0;             // final angle in the split plane (rad)
  TrajectoryStatus status = TrajectoryStatus::CompletedWindow;
  long steps = 0;
  double energy_drift = 0.0;      // full engine only
  double max_adiabaticity = 0.0;  // adiabatic engine only
  std::string message;
};

struct SpinSummary {
  std::string label;  // "+x", "-x", "+y", "-y" or "other"
  std::size_t count = 0;
  std::size_t crashed = 0;
  std::size_t failed = 0;
  double mean_angle = 0.0;    // over surviving ions (rad)
  double angle_spread = 0.0;  // sample standard deviation (rad)
  double mean_vy = 0.0, spread_vy = 0.0;
  double mean_vz = 0.0, spread_vz = 0.0;
  double mean_closest = 0.0, spread_closest = 0.0;
};

struct EnsembleResult {
  std::vector<IonRecord> records;  // submission order
  std::vector<SpinSummary> spins;  // sorted by label
  double resolution_ratio = 0.0;   // |mean angle separation| / mean spread
  std::size_t crashed = 0;
  std::uint64_t seed = 0;
  Engine engine = Engine::Adiabatic;
};

/// Integrates every state; per-ion failures are recorded, not thrown.
/// Throws std::invalid_argument for an empty batch or a setup missing the
/// engine's field description.
EnsembleResult run_ensemble(const std::vector<IonState>& states, const EnsembleSetup& setup,
                            std::uint64_t seed = 0);

/// Recomputes the per-spin summaries and resolution ratio from records.
void summarise(EnsembleResult& result);

/// |mean_a - mean_b| / ((spread_a + spread_b) / 2) for a +/- pair of spin
/// labels along the same axis; 0 when there is no such pair.
double resolution_ratio(const std::vector<SpinSummary>& spins);

struct VelocityHistogram {
  std::string label;
  double vz_min = 0.0, vz_max = 0.0;
  double vy_min = 0.0, vy_max = 0.0;
  int bins_vz = 0, bins_vy = 0;
  std::vector<long> counts;  // row-major [iz * bins_vy + iy]
};

/// 2D histograms of the final (v_z, v_y) per spin label over survivors, on
/// a common grid spanning all survivors.
std::vector<VelocityHistogram> velocity_histograms(const EnsembleResult& result, int bins_vz,
                                                   int bins_vy);

// ---------------------------------------------------------------------------
// Closest approach against initial vertical velocity
// ---------------------------------------------------------------------------

struct ApproachPoint {
  double vy0 = 0.0;      // initial vertical speed |v_y0| (m/s)
  double spin = 0.0;     // S_x0
  double closest = 0.0;  // turning point (m); NaN when crashed or truncated
  bool crashed = false;
};

/// Sweeps |v_y0| over [vy_min, vy_max] in `n` points for S_x0 = +1/2 and
/// -1/2, launching from `frame.height` with v_z = sqrt(v^2 - v_y0^2). A
/// branch is truncated (flagged crashed) from its first crash onwards.
std::vector<ApproachPoint> closest_approach_curve(const SourceParams& src,
                                                  const LaunchFrame& frame,
                                                  const AdiabaticParams& p,
                                                  const ImageParams& image, double vy_min,
                                                  double vy_max, int n, double floor,
                                                  const Ion& ion = Ion::calcium40());

}  // namespace sgbeam
