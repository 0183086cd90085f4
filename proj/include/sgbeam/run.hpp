#pragma once

// Config-driven runs shared by the command-line tool, the Python module and
// the acceptance tests.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sgbeam/adiabatic.hpp"
#include "sgbeam/config.hpp"
#include "sgbeam/dynamics.hpp"
#include "sgbeam/ensemble.hpp"
#include "sgbeam/fields.hpp"

namespace sgbeam {

/// One launch of the `simulate` command.
struct SpinRun {
  SpinPreparation spin = SpinPreparation::PlusX;
  IonState initial;
  IonState final;
  TrajectoryStatus status = TrajectoryStatus::CompletedWindow;
  double closest_approach = 0.0;    // min y (m)
  double max_x_excursion = 0.0;     // max |x - x0| (m), full engine
  std::optional<Trajectory> full;
  std::optional<AdiabaticTrajectory> adiabatic;
};

struct SimulationResult {
  Engine engine = Engine::Full;
  std::vector<SpinRun> runs;  // one per configured spin, in order
};

/// Angle of v in the y-z plane, atan2(v_y, v_z).
double vertical_angle(const Vec3& v);
/// Angle of v in the x-z plane, atan2(v_x, v_z).
double horizontal_angle(const Vec3& v);

/// Integrates the configured launch for every entry of launch.spins with
/// the configured engine.
SimulationResult simulate(const RunConfig& config);

/// Samples (and, if enabled, focuses) the configured source and runs the
/// batch. `workers` > 0 overrides the config. Requires a [source] block.
EnsembleResult run_config_ensemble(const RunConfig& config, int workers = 0);

/// Closest approach against |v_y0| for both spins; requires [sweep] and the
/// grating scenario.
std::vector<ApproachPoint> run_config_sweep(const RunConfig& config);

/// Regular grid of sample points; each axis spans [lo, hi] in n points
/// (n = 1 places a single point at lo).
struct GridSpec {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{0.0, 0.0, 0.0};
  std::array<int, 3> n{1, 1, 1};

  std::size_t size() const;
  Vec3 point(std::size_t index) const;  // x fastest
};

/// Parses "x=lo:hi:n,y=lo:hi:n,z=lo:hi:n" with units on the bounds, e.g.
/// "x=0um:0um:1,y=10um:60um:11,z=0um:50um:11". Omitted axes sit at 0.
/// A single value "y=20um" is a one-point axis.
GridSpec parse_grid(const std::string& text);

struct FieldCheckRow {
  Vec3 r = Vec3::Zero();
  bool valid = true;  // false where the model is undefined (inside a conductor)
  FieldSample sample;
  MaxwellResiduals residuals;

  /// Largest of |div|, |curl| and the Jacobian mismatch over |J|.
  double relative_residual() const;
};

/// Samples the configured field on the grid and checks Maxwell's equations
/// with finite differences of step h.
std::vector<FieldCheckRow> field_check(const RunConfig& config, const GridSpec& grid, double h);

}  // namespace sgbeam
