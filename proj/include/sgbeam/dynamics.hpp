#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sgbeam/constants.hpp"
#include "sgbeam/fields.hpp"
#include "sgbeam/forces.hpp"
#include "sgbeam/types.hpp"

namespace sgbeam {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;  // in scaled units: um, m/s, dimensionless spin
  double max_step = 1e-9;  // s
  double min_step = 1e-20; // s
  std::optional<double> y_min;   // crash height (m); unset disables the check
  double t_max = 1e-3;           // s
  std::optional<double> z_exit;  // leaving the window along +z
  int record_stride = 100;       // keep every n-th accepted step
  bool renormalise_spin = true;
  long max_steps = 200'000'000;

  void validate() const;

  bool operator==(const IntegratorOptions&) const = default;
};

enum class TrajectoryStatus { CompletedWindow, ExitedRegion, Crashed, StepFailure };

const char* to_string(TrajectoryStatus s);

struct TrajectoryDiagnostics {
  double initial_energy = 0.0;     // J
  double final_energy = 0.0;       // J
  double energy_drift = 0.0;       // max |H - H0| / |H0| over accepted steps
  double max_spin_norm_drift = 0.0;// max ||S| - |S0|| before any renormalisation
  double min_height = std::numeric_limits<double>::infinity();  // min y (m)
  double max_x_excursion = 0.0;    // max |x - x0| (m)
  long accepted_steps = 0;
  long rejected_steps = 0;
  std::string message;
};

struct Trajectory {
  std::vector<IonState> samples;
  TrajectoryStatus status = TrajectoryStatus::CompletedWindow;
  TrajectoryDiagnostics diagnostics;

  const IonState& initial() const { return samples.front(); }
  const IonState& final() const { return samples.back(); }
};

struct Derivative {
  Vec3 dr;
  Vec3 dv;
  Vec3 dS;
};

/// Right-hand side of the coupled equations
///   dr/dt = v,  dv/dt = (F_SG + F_L + F_im)/m,  dS/dt = -(g mu_B/hbar) S x B.
Derivative rhs(const IonState& state, const FieldModel& field, const ImageParams& image,
               const Ion& ion = Ion::calcium40());

/// H = m v^2/2 + g mu_B S.B + V_im. Conserved along exact trajectories in
/// static curl-free fields. Image term only when enabled.
double conserved_energy(const IonState& state, const FieldModel& field,
                        const ImageParams& image, const Ion& ion = Ion::calcium40());

/// Adaptive Dormand-Prince integration of one ion.
Trajectory integrate(const IonState& initial, const FieldModel& field, const ImageParams& image,
                     const IntegratorOptions& opts, const Ion& ion = Ion::calcium40());

/// Runs one trajectory per spin through the multipole field restricted to
/// the window 0 <= z <= window_length. The launch template supplies t, r, v.
std::vector<Trajectory> run_multipole_scenario(const std::vector<Vec3>& spins,
                                               const IonState& launch,
                                               const MultipoleParams& params,
                                               double window_length,
                                               IntegratorOptions opts = {},
                                               const Ion& ion = Ion::calcium40());

/// Field of `inner` multiplied by a constant; factor -1 gives the
/// time-reversed field.
class ScaledField final : public FieldModel {
 public:
  ScaledField(FieldModelPtr inner, double factor) : inner_(std::move(inner)), factor_(factor) {}
  FieldSample sample(const Vec3& r) const override;

 private:
  FieldModelPtr inner_;
  double factor_;
};

}  // namespace sgbeam
