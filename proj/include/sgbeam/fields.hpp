#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "sgbeam/types.hpp"

namespace sgbeam {

/// Static magnetic field model. Implementations are immutable after
/// construction, so one instance may be sampled from many threads.
class FieldModel {
 public:
  virtual ~FieldModel() = default;

  /// Field and Jacobian at r. Throws DomainError outside the model's domain.
  virtual FieldSample sample(const Vec3& r) const = 0;
};

using FieldModelPtr = std::shared_ptr<const FieldModel>;

// ---------------------------------------------------------------------------
// Multipole edge configuration
// ---------------------------------------------------------------------------

/// Scalar-potential expansion up to octupole order between two magnetised
/// pole pieces, B = -grad(Phi) with
///   Phi = a2/(2 y0) sqrt(15/4pi) x y
///       + a3/(3 y0^2) sqrt(21/32pi) x (4 z^2 - x^2 - y^2)
///       + a4/(4 y0^3) sqrt(315/16pi) x y (x^2 - y^2).
struct MultipoleParams {
  double a2 = 0.0;  // quadrupole amplitude (T)
  double a3 = 0.0;  // hexapole amplitude (T)
  double a4 = 0.0;  // octupole amplitude (T)
  double y0 = 0.0;  // half gap between the poles (m)

  void validate() const;

  /// Quadrupole gradient a2/(2 y0) sqrt(15/4pi), the B' of the on-axis force.
  double quadrupole_gradient() const;

  bool operator==(const MultipoleParams&) const = default;
};

/// Exact polynomial field. Defined everywhere; the expansion is meaningful
/// for |x|, |y| < y0.
FieldSample multipole_field(const Vec3& r, const MultipoleParams& p);

/// On-axis hexapole component B_x(0, 0, z).
double multipole_axis_field(double z, const MultipoleParams& p);

// ---------------------------------------------------------------------------
// Straight wires
// ---------------------------------------------------------------------------

/// Field of an infinitely long, infinitely thin wire along the unit vector
/// `axis` through `point`, carrying `current` in the +axis direction.
FieldSample line_current_field(const Vec3& r, const Vec3& point, const Vec3& axis,
                               double current);

enum class WireModel { Thin, Filament };

/// Two parallel wires along z at x = +-d, y = 0 with equal currents. The
/// beam axis is the z-axis, where the field vanishes.
struct TwoWireParams {
  double current = 0.0;          // per wire (A)
  double half_separation = 0.0;  // d: beam axis to wire centre (m)
  double width = 0.0;            // wire extent along x (m)
  double thickness = 0.0;        // wire extent along y (m)
  double length = 0.0;           // wire length along z (m); L >> d assumed
  WireModel model = WireModel::Thin;
  int filaments = 16;  // per side of the cross-section in Filament mode

  void validate() const;

  bool operator==(const TwoWireParams&) const = default;
};

FieldSample two_wire_field(const Vec3& r, const TwoWireParams& p);

// ---------------------------------------------------------------------------
// Periodic wire grating
// ---------------------------------------------------------------------------

/// Array of wires along x with alternating currents, centres at z = k * pitch,
/// rectangular cross-sections occupying -thickness <= y <= 0. The wire at
/// z = 0 carries +current along +x.
struct GratingParams {
  double current = 0.0;    // per wire (A)
  double width = 0.0;      // along z (m)
  double thickness = 0.0;  // along y (m)
  double pitch = 0.0;      // centre-to-centre spacing of opposite currents (m)
  int n_max = 9;           // highest odd harmonic kept by the Fourier form

  /// When set, all harmonics are rescaled so that the first harmonic has
  /// this amplitude (T) at the top wire surface.
  std::optional<double> surface_amplitude;

  double kappa() const;
  void validate() const;

  bool operator==(const GratingParams&) const = default;
};

/// Coefficient A_n (T m) of the scalar potential
/// Phi = -sum_n A_n exp(-n kappa y) sin(n kappa z) for a uniform current
/// distribution, before any surface_amplitude rescaling. Zero for even n.
double grating_potential_coefficient(const GratingParams& p, int n);

/// Field amplitude n kappa A_n of harmonic n at the top wire surface (T),
/// including the surface_amplitude rescaling.
double grating_harmonic_amplitude(const GratingParams& p, int n);

/// Truncated Fourier form. Throws DomainError for y < 0.
FieldSample grating_field_fourier(double y, double z, const GratingParams& p);

/// Subdivision of each rectangular cross-section into filaments.
struct FilamentGrid {
  int along_width = 32;
  int along_thickness = 4;
};

/// Direct summation over `n_wires` finite wires (centred on z = 0), each
/// split into filaments. Independent of the Fourier form; used as its oracle.
/// Throws DomainError inside a wire.
FieldSample grating_field_biot_savart(const Vec3& r, const GratingParams& p,
                                      int n_wires, const FilamentGrid& grid = {});

/// As above, doubling the filament grid until |B| changes by less than
/// `rel_change` between successive refinements.
FieldSample grating_field_biot_savart_adaptive(const Vec3& r, const GratingParams& p,
                                               int n_wires, double rel_change = 1e-3,
                                               FilamentGrid* converged = nullptr);

// ---------------------------------------------------------------------------
// Model objects
// ---------------------------------------------------------------------------

class UniformField final : public FieldModel {
 public:
  explicit UniformField(const Vec3& B) : B_(B) {}
  FieldSample sample(const Vec3&) const override;

 private:
  Vec3 B_;
};

class MultipoleField final : public FieldModel {
 public:
  explicit MultipoleField(const MultipoleParams& p);
  FieldSample sample(const Vec3& r) const override;
  const MultipoleParams& params() const { return p_; }

 private:
  MultipoleParams p_;
};

class TwoWireField final : public FieldModel {
 public:
  explicit TwoWireField(const TwoWireParams& p);
  FieldSample sample(const Vec3& r) const override;
  const TwoWireParams& params() const { return p_; }

 private:
  TwoWireParams p_;
};

class GratingFourierField final : public FieldModel {
 public:
  explicit GratingFourierField(const GratingParams& p);
  FieldSample sample(const Vec3& r) const override;
  const GratingParams& params() const { return p_; }

 private:
  GratingParams p_;
  std::vector<double> amplitudes_;  // odd harmonics 1, 3, ..., n_max at y = 0
};

class GratingBiotSavartField final : public FieldModel {
 public:
  GratingBiotSavartField(const GratingParams& p, int n_wires, FilamentGrid grid = {});
  FieldSample sample(const Vec3& r) const override;

 private:
  GratingParams p_;
  int n_wires_;
  FilamentGrid grid_;
};

/// Hard on/off window along z: the inner field inside [z_min, z_max], zero
/// outside.
class WindowedField final : public FieldModel {
 public:
  WindowedField(FieldModelPtr inner, double z_min, double z_max);
  FieldSample sample(const Vec3& r) const override;

 private:
  FieldModelPtr inner_;
  double z_min_;
  double z_max_;
};

class ComposedField final : public FieldModel {
 public:
  explicit ComposedField(std::vector<FieldModelPtr> parts);
  FieldSample sample(const Vec3& r) const override;

 private:
  std::vector<FieldModelPtr> parts_;
};

/// Sum of the given models (B and J add).
FieldModelPtr compose_fields(std::vector<FieldModelPtr> models);

// ---------------------------------------------------------------------------
// Maxwell checks
// ---------------------------------------------------------------------------

struct MaxwellResiduals {
  double divergence = 0.0;     // |trace(J_fd)| (T/m)
  Vec3 curl = Vec3::Zero();    // curl from J_fd (T/m)
  double jacobian_error = 0.0; // max |J_fd - J_analytic| (T/m)
  double jacobian_norm = 0.0;  // Frobenius norm of J_analytic (T/m)
};

/// Central finite differences of B with step h, Richardson-extrapolated
/// from h and h/2, compared against the model's own Jacobian.
MaxwellResiduals check_maxwell(const FieldModel& model, const Vec3& r, double h);

}  // namespace sgbeam
