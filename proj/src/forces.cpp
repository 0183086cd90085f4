#include "sgbeam/forces.hpp"

#include <string>

namespace sgbeam {

namespace {

double image_strength(double charge) {
  return charge * charge / (16.0 * codata::pi * codata::vacuum_permittivity);
}

double height_above(double y, const ImageParams& p) {
  const double h = y - p.surface_height;
  if (!(h > 0.0)) {
    throw DomainError("image charge: ion at or below the surface (height " +
                      std::to_string(h) + " m)");
  }
  return h;
}

}  // namespace

Vec3 sg_force(const Vec3& S, const FieldSample& fs, double g_factor) {
  return -g_factor * codata::bohr_magneton * (fs.J * S);
}

Vec3 lorentz_force(const Vec3& v, const Vec3& B, double charge) { return charge * v.cross(B); }

double image_potential(double y, const ImageParams& p, double charge) {
  return -image_strength(charge) / height_above(y, p);
}

Vec3 image_force(double y, const ImageParams& p, double charge) {
  if (!p.enabled) return Vec3::Zero();
  const double h = height_above(y, p);
  return Vec3(0.0, -image_strength(charge) / (h * h), 0.0);
}

Vec3 total_acceleration(const IonState& state, const FieldSample& fs, const ImageParams& image,
                        const Ion& ion) {
  const Vec3 force = sg_force(state.S, fs, ion.g_factor) +
                     lorentz_force(state.v, fs.B, ion.charge) +
                     image_force(state.r.y(), image, ion.charge);
  return force / ion.mass;
}

Vec3 total_acceleration(const IonState& state, const FieldModel& field,
                        const ImageParams& image, const Ion& ion) {
  return total_acceleration(state, field.sample(state.r), image, ion);
}

}  // namespace sgbeam
