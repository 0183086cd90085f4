#pragma once

#include "sgbeam/constants.hpp"
#include "sgbeam/fields.hpp"
#include "sgbeam/types.hpp"

namespace sgbeam {

/// Grounded conducting plane y = surface_height that attracts the ion
/// through its image charge.
struct ImageParams {
  double surface_height = 0.0;
  bool enabled = false;

  bool operator==(const ImageParams&) const = default;
};

/// Spin-dependent force -g mu_B (S . grad) B, i.e. F_i = -g mu_B sum_j J_ij S_j.
/// Uses the Jacobian directly; no adiabatic |B|-gradient approximation.
Vec3 sg_force(const Vec3& S, const FieldSample& fs, double g_factor = kElectronGFactor);

/// q v x B.
Vec3 lorentz_force(const Vec3& v, const Vec3& B, double charge = codata::elementary_charge);

/// Image-charge potential -q^2 / (16 pi eps0 h) at height h = y - surface.
/// Throws DomainError for h <= 0.
double image_potential(double y, const ImageParams& p,
                       double charge = codata::elementary_charge);

/// -grad of image_potential: (0, -q^2 / (16 pi eps0 h^2), 0). Zero when the
/// image is disabled. Throws DomainError for h <= 0.
Vec3 image_force(double y, const ImageParams& p, double charge = codata::elementary_charge);

/// (SG + Lorentz + image) / m for the given state.
Vec3 total_acceleration(const IonState& state, const FieldModel& field,
                        const ImageParams& image, const Ion& ion = Ion::calcium40());

/// Same, reusing an already evaluated field sample at state.r.
Vec3 total_acceleration(const IonState& state, const FieldSample& fs,
                        const ImageParams& image, const Ion& ion);

}  // namespace sgbeam
