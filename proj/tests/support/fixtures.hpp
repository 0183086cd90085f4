#pragma once

// Shared parameter sets for the test suites.

#include <cmath>
#include <memory>

#include "sgbeam/dynamics.hpp"
#include "sgbeam/fields.hpp"
#include "sgbeam/units.hpp"

namespace sgbeam::testing {

inline GratingParams table2_grating() {
  GratingParams p;
  p.current = 1.0;
  p.width = 40 * units::um;
  p.thickness = 2 * units::um;
  p.pitch = 50 * units::um;
  p.n_max = 9;
  return p;
}

// Reference grating driven to a 360 G first-harmonic surface amplitude.
inline GratingParams fig4_grating() {
  auto p = table2_grating();
  p.surface_amplitude = 360 * units::gauss;
  return p;
}

inline constexpr double kFig4Bias = 20 * units::gauss;
inline constexpr double kFig4Speed = 700.0;
inline constexpr double kFig4Incidence = 54e-3;
inline constexpr double kFig4LaunchHeight = 243.08 * units::um;
inline constexpr double kFig4Length = 20 * units::mm;

inline FieldModelPtr fig4_field(const GratingParams& g = fig4_grating()) {
  return compose_fields({std::make_shared<UniformField>(Vec3(kFig4Bias, 0, 0)),
                         std::make_shared<GratingFourierField>(g)});
}

inline IonState fig4_launch(double spin_x) {
  IonState s;
  s.r = Vec3(0, kFig4LaunchHeight, 0);
  s.v = kFig4Speed * Vec3(0, -std::sin(kFig4Incidence), std::cos(kFig4Incidence));
  s.S = Vec3(spin_x, 0, 0);
  return s;
}

inline IntegratorOptions fig4_options() {
  IntegratorOptions o;
  o.z_exit = kFig4Length;
  o.y_min = 2 * units::um;
  o.t_max = 100 * units::us;
  return o;
}

inline ImageParams surface_image() { return ImageParams{0.0, true}; }

}  // namespace sgbeam::testing
