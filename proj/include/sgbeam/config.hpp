#pragma once

// Run configuration files.
//
// INI-style text: `key = value` lines grouped under `[section]` headers,
// comments start with '#' or ';'. Every dimensioned value carries its unit
// ("20 G", "50 um", "700 m/s"); bare numbers are accepted only for
// dimensionless entries. Unknown sections or keys are errors.
//
//   engine = full
//   seed = 7
//
//   [grating]
//   current = 1 A
//   pitch = 50 um
//   ...

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgbeam/adiabatic.hpp"
#include "sgbeam/dynamics.hpp"
#include "sgbeam/ensemble.hpp"
#include "sgbeam/fields.hpp"
#include "sgbeam/forces.hpp"

namespace sgbeam {

// ---------------------------------------------------------------------------
// Quantities with units
// ---------------------------------------------------------------------------

enum class Dimension {
  Dimensionless,
  Length,
  Time,
  Current,
  Field,
  Gradient,
  Speed,
  Energy,
  Angle,
  Mass,
  Momentum,
  Emittance,  // m rad sqrt(J)
};

const char* to_string(Dimension d);

/// SI unit string used when writing values back out.
const char* canonical_unit(Dimension d);

/// Parses "<number> <unit>" (the space is optional) and returns the SI
/// value. Throws std::invalid_argument if the number is malformed, the unit
/// is unknown, or the unit's dimension differs from `expected`. A bare
/// number is only accepted for Dimension::Dimensionless.
double parse_quantity(const std::string& text, Dimension expected);

/// Accepted unit spellings for a dimension, for error messages and docs.
std::vector<std::string> units_for(Dimension d);

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Syntax or unit error at a position in the text (1-based line/column).
class ConfigParseError : public std::runtime_error {
 public:
  /// what() reads "line L, column C: message", or "source:L:C: message"
  /// when the source (a file path) is known.
  ConfigParseError(int line, int column, const std::string& message,
                   const std::string& source = "");
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

/// Well-formed text that violates an invariant (missing keys, two scenario
/// blocks, ...).
class ConfigValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

enum class Scenario { Multipole, TwoWire, Grating };

const char* to_string(Scenario s);

struct LaunchConfig {
  double x = 0.0, y = 0.0, z = 0.0;  // m
  double speed = 0.0;                 // m/s; the file may give `energy` instead
  double incidence = 0.0;             // rad below +z in the y-z plane
  double azimuth = 0.0;               // rad towards +x
  std::vector<SpinPreparation> spins{SpinPreparation::PlusX, SpinPreparation::MinusX};

  bool operator==(const LaunchConfig&) const = default;
};

struct EnsembleConfig {
  std::size_t count = 1000;
  int workers = 0;  // 0: SGBEAM_WORKERS or hardware concurrency
  int bins_vz = 60;
  int bins_vy = 60;
  SplitPlane plane = SplitPlane::Vertical;

  bool operator==(const EnsembleConfig&) const = default;
};

struct SweepConfig {
  double vy_min = 0.0;  // m/s
  double vy_max = 0.0;  // m/s
  int points = 50;
  double floor = 1e-6;  // m, crash height for the closed-form turning point

  bool operator==(const SweepConfig&) const = default;
};

struct OutputConfig {
  std::string directory = ".";
  std::string prefix = "run";

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  Scenario scenario = Scenario::Grating;
  std::optional<MultipoleParams> multipole;
  std::optional<TwoWireParams> two_wire;
  std::optional<GratingParams> grating;
  std::array<double, 3> bias{0.0, 0.0, 0.0};  // uniform field (T)
  ImageParams image;
  Engine engine = Engine::Full;
  std::uint64_t seed = 1;
  LaunchConfig launch;
  double window_length = 0.0;  // exit plane z (m)
  IntegratorOptions integrator;
  std::optional<SourceParams> source;  // mean speed taken from launch.speed
  EnsembleConfig ensemble;
  FocusSpec focus;
  std::optional<SweepConfig> sweep;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;

  /// Static field of the scenario plus the bias. The multipole and two-wire
  /// fields are windowed to 0 <= z <= window_length; the grating is not.
  FieldModelPtr field_model() const;

  /// Centre-of-beam initial state for spin preparation `spin`.
  IonState launch_state(SpinPreparation spin) const;

  /// Reduced-model parameters; requires the grating scenario.
  AdiabaticParams adiabatic_params(double Sx0 = 0.5) const;

  LaunchFrame launch_frame() const;

  /// Integrator options with z_exit set to the window.
  IntegratorOptions integrator_options() const;
};

/// Parses and validates. Throws ConfigParseError (with line and column) or
/// ConfigValidationError. `engine` replaces the file's engine before the
/// engine-dependent integrator defaults are applied.
RunConfig parse_config(const std::string& text, std::optional<Engine> engine = std::nullopt);

/// Reads a file and parses it; errors are prefixed with the path.
RunConfig load_config(const std::string& path, std::optional<Engine> engine = std::nullopt);

/// Canonical text form (SI units, full precision); parse_config of the
/// result compares equal to `config`.
std::string serialize_config(const RunConfig& config);

}  // namespace sgbeam
