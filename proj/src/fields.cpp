#include "sgbeam/fields.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "sgbeam/constants.hpp"

namespace sgbeam {

namespace {

constexpr double kPi = codata::pi;

Mat3 cross_matrix(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return m;
}

double quadrupole_coefficient(const MultipoleParams& p) {
  return p.a2 / (2.0 * p.y0) * std::sqrt(15.0 / (4.0 * kPi));
}

double hexapole_coefficient(const MultipoleParams& p) {
  return p.a3 / (3.0 * p.y0 * p.y0) * std::sqrt(21.0 / (32.0 * kPi));
}

double octupole_coefficient(const MultipoleParams& p) {
  return p.a4 / (4.0 * p.y0 * p.y0 * p.y0) * std::sqrt(315.0 / (16.0 * kPi));
}

}  // namespace

// ---------------------------------------------------------------------------

void MultipoleParams::validate() const {
  if (!(y0 > 0.0)) {
    throw std::invalid_argument("MultipoleParams: y0 must be positive");
  }
}

double MultipoleParams::quadrupole_gradient() const { return quadrupole_coefficient(*this); }

FieldSample multipole_field(const Vec3& r, const MultipoleParams& p) {
  const double c2 = quadrupole_coefficient(p);
  const double c3 = hexapole_coefficient(p);
  const double c4 = octupole_coefficient(p);
  const double x = r.x(), y = r.y(), z = r.z();

  // grad Phi
  const Vec3 grad(c2 * y + c3 * (4.0 * z * z - 3.0 * x * x - y * y) +
                      c4 * (3.0 * x * x * y - y * y * y),
                  c2 * x - 2.0 * c3 * x * y + c4 * (x * x * x - 3.0 * x * y * y),
                  8.0 * c3 * x * z);

  // Hessian of Phi
  const double hxx = -6.0 * c3 * x + 6.0 * c4 * x * y;
  const double hxy = c2 - 2.0 * c3 * y + 3.0 * c4 * (x * x - y * y);
  const double hxz = 8.0 * c3 * z;
  const double hyy = -2.0 * c3 * x - 6.0 * c4 * x * y;
  const double hzz = 8.0 * c3 * x;

  FieldSample s;
  s.B = -grad;
  s.J << -hxx, -hxy, -hxz,
         -hxy, -hyy, 0.0,
         -hxz, 0.0, -hzz;
  return s;
}

double multipole_axis_field(double z, const MultipoleParams& p) {
  return -4.0 * hexapole_coefficient(p) * z * z;
}

// ---------------------------------------------------------------------------

FieldSample line_current_field(const Vec3& r, const Vec3& point, const Vec3& axis,
                               double current) {
  const Vec3 a = axis.normalized();
  const Mat3 proj = Mat3::Identity() - a * a.transpose();
  const Vec3 rho = proj * (r - point);
  const double rho2 = rho.squaredNorm();
  if (rho2 == 0.0) {
    throw DomainError("line_current_field: evaluation on the wire");
  }
  const double k = codata::vacuum_permeability * current / (2.0 * kPi);
  const Vec3 axr = a.cross(rho);

  FieldSample s;
  s.B = k * axr / rho2;
  s.J = k * (cross_matrix(a) * proj / rho2 - 2.0 * axr * rho.transpose() / (rho2 * rho2));
  return s;
}

void TwoWireParams::validate() const {
  if (!(half_separation > 0.0)) {
    throw std::invalid_argument("TwoWireParams: half separation d must be positive");
  }
  if (width < 0.0 || thickness < 0.0) {
    throw std::invalid_argument("TwoWireParams: wire dimensions must be >= 0");
  }
  if (width >= 2.0 * half_separation) {
    throw std::invalid_argument("TwoWireParams: wires overlap the beam axis (w >= 2d)");
  }
  if (model == WireModel::Filament && (filaments < 1 || !(width > 0.0) || !(thickness > 0.0))) {
    throw std::invalid_argument("TwoWireParams: filament model needs w, t > 0 and filaments >= 1");
  }
}

FieldSample two_wire_field(const Vec3& r, const TwoWireParams& p) {
  const Vec3 axis = Vec3::UnitZ();
  FieldSample total;
  for (const double xc : {-p.half_separation, p.half_separation}) {
    if (std::abs(r.x() - xc) < 0.5 * p.width && std::abs(r.y()) < 0.5 * p.thickness) {
      throw DomainError("two_wire_field: point inside wire cross-section");
    }
    if (p.model == WireModel::Thin) {
      total += line_current_field(r, Vec3(xc, 0.0, 0.0), axis, p.current);
      continue;
    }
    const int n = p.filaments;
    const double dI = p.current / (n * n);
    for (int i = 0; i < n; ++i) {
      const double fx = xc - 0.5 * p.width + (i + 0.5) * p.width / n;
      for (int j = 0; j < n; ++j) {
        const double fy = -0.5 * p.thickness + (j + 0.5) * p.thickness / n;
        total += line_current_field(r, Vec3(fx, fy, 0.0), axis, dI);
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------

double GratingParams::kappa() const { return kPi / pitch; }

void GratingParams::validate() const {
  if (!(pitch > 0.0)) throw std::invalid_argument("GratingParams: pitch must be positive");
  if (!(width > 0.0) || !(width < pitch)) {
    throw std::invalid_argument("GratingParams: need 0 < width < pitch");
  }
  if (!(thickness > 0.0)) throw std::invalid_argument("GratingParams: thickness must be positive");
  if (n_max < 1 || n_max % 2 == 0) {
    throw std::invalid_argument("GratingParams: n_max must be odd and >= 1");
  }
  if (surface_amplitude && !std::isfinite(*surface_amplitude)) {
    throw std::invalid_argument("GratingParams: surface amplitude must be finite");
  }
}

double grating_potential_coefficient(const GratingParams& p, int n) {
  if (n <= 0 || n % 2 == 0) return 0.0;
  const double nk = n * p.kappa();
  const double width_factor = std::sin(0.5 * nk * p.width) / (nk * p.width);
  const double thickness_factor = -std::expm1(-nk * p.thickness) / (nk * p.thickness);
  return 2.0 * codata::vacuum_permeability * p.current / (kPi * n) * width_factor *
         thickness_factor;
}

double grating_harmonic_amplitude(const GratingParams& p, int n) {
  const double raw = n * p.kappa() * grating_potential_coefficient(p, n);
  if (!p.surface_amplitude) return raw;
  const double first = p.kappa() * grating_potential_coefficient(p, 1);
  return raw * (*p.surface_amplitude / first);
}

namespace {

FieldSample fourier_sum(double y, double z, double kappa, const double* amplitudes,
                        int n_max) {
  if (y < 0.0) {
    throw DomainError("grating_field_fourier: expansion valid only for y >= 0, got y = " +
                      std::to_string(y));
  }
  const double decay1 = std::exp(-kappa * y);
  const double decay2 = decay1 * decay1;
  const double s1 = std::sin(kappa * z), c1 = std::cos(kappa * z);
  const double s2 = 2.0 * s1 * c1, c2 = c1 * c1 - s1 * s1;

  double by = 0.0, bz = 0.0, dsin = 0.0, dcos = 0.0;
  double sn = s1, cn = c1, decay = decay1;
  for (int n = 1; n <= n_max; n += 2) {
    const double bn = amplitudes[(n - 1) / 2] * decay;
    by -= bn * sn;
    bz += bn * cn;
    dsin += n * kappa * bn * sn;
    dcos += n * kappa * bn * cn;
    const double next_s = sn * c2 + cn * s2;
    const double next_c = cn * c2 - sn * s2;
    sn = next_s;
    cn = next_c;
    decay *= decay2;
  }

  FieldSample s;
  s.B = Vec3(0.0, by, bz);
  s.J << 0.0, 0.0, 0.0,
         0.0, dsin, -dcos,
         0.0, -dcos, -dsin;
  return s;
}

std::vector<double> odd_amplitudes(const GratingParams& p) {
  std::vector<double> a;
  for (int n = 1; n <= p.n_max; n += 2) a.push_back(grating_harmonic_amplitude(p, n));
  return a;
}

}  // namespace

FieldSample grating_field_fourier(double y, double z, const GratingParams& p) {
  const auto amplitudes = odd_amplitudes(p);
  return fourier_sum(y, z, p.kappa(), amplitudes.data(), p.n_max);
}

FieldSample grating_field_biot_savart(const Vec3& r, const GratingParams& p, int n_wires,
                                      const FilamentGrid& grid) {
  if (n_wires < 1) throw std::invalid_argument("grating_field_biot_savart: n_wires >= 1");
  if (grid.along_width < 1 || grid.along_thickness < 1) {
    throw std::invalid_argument("grating_field_biot_savart: empty filament grid");
  }
  const int j_lo = (n_wires % 2 == 1) ? -(n_wires - 1) / 2 : -n_wires / 2;
  const int j_hi = j_lo + n_wires - 1;
  const double y = r.y(), z = r.z();

  if (y >= -p.thickness && y <= 0.0) {
    const long nearest = std::lround(z / p.pitch);
    if (nearest >= j_lo && nearest <= j_hi &&
        std::abs(z - nearest * p.pitch) <= 0.5 * p.width) {
      throw DomainError("grating_field_biot_savart: point inside a wire");
    }
  }

  const double filament_current =
      p.current / (static_cast<double>(grid.along_width) * grid.along_thickness);
  const double k0 = codata::vacuum_permeability * filament_current / (2.0 * kPi);

  double by = 0.0, bz = 0.0, jyy = 0.0, jyz = 0.0;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double k = (j % 2 == 0) ? k0 : -k0;
    const double zc = j * p.pitch;
    for (int i = 0; i < grid.along_width; ++i) {
      const double dz = z - (zc - 0.5 * p.width + (i + 0.5) * p.width / grid.along_width);
      for (int m = 0; m < grid.along_thickness; ++m) {
        const double dy =
            y - (-p.thickness + (m + 0.5) * p.thickness / grid.along_thickness);
        const double rho2 = dy * dy + dz * dz;
        const double inv2 = 1.0 / rho2;
        const double inv4 = inv2 * inv2;
        by -= k * dz * inv2;
        bz += k * dy * inv2;
        jyy += 2.0 * k * dz * dy * inv4;
        jyz += k * (dz * dz - dy * dy) * inv4;
      }
    }
  }

  FieldSample s;
  s.B = Vec3(0.0, by, bz);
  s.J << 0.0, 0.0, 0.0,
         0.0, jyy, jyz,
         0.0, jyz, -jyy;
  return s;
}

FieldSample grating_field_biot_savart_adaptive(const Vec3& r, const GratingParams& p,
                                               int n_wires, double rel_change,
                                               FilamentGrid* converged) {
  FilamentGrid grid{8, 1};
  FieldSample prev = grating_field_biot_savart(r, p, n_wires, grid);
  for (int level = 0; level < 8; ++level) {
    FilamentGrid finer{grid.along_width * 2, grid.along_thickness * 2};
    FieldSample next = grating_field_biot_savart(r, p, n_wires, finer);
    const double change = (next.B - prev.B).norm() / std::max(next.B.norm(), 1e-300);
    grid = finer;
    prev = std::move(next);
    if (change < rel_change) break;
  }
  if (converged) *converged = grid;
  return prev;
}

// ---------------------------------------------------------------------------

FieldSample UniformField::sample(const Vec3&) const {
  FieldSample s;
  s.B = B_;
  return s;
}

MultipoleField::MultipoleField(const MultipoleParams& p) : p_(p) { p_.validate(); }

FieldSample MultipoleField::sample(const Vec3& r) const { return multipole_field(r, p_); }

TwoWireField::TwoWireField(const TwoWireParams& p) : p_(p) { p_.validate(); }

FieldSample TwoWireField::sample(const Vec3& r) const { return two_wire_field(r, p_); }

GratingFourierField::GratingFourierField(const GratingParams& p) : p_(p) {
  p_.validate();
  amplitudes_ = odd_amplitudes(p_);
}

FieldSample GratingFourierField::sample(const Vec3& r) const {
  return fourier_sum(r.y(), r.z(), p_.kappa(), amplitudes_.data(), p_.n_max);
}

GratingBiotSavartField::GratingBiotSavartField(const GratingParams& p, int n_wires,
                                               FilamentGrid grid)
    : p_(p), n_wires_(n_wires), grid_(grid) {
  p_.validate();
}

FieldSample GratingBiotSavartField::sample(const Vec3& r) const {
  return grating_field_biot_savart(r, p_, n_wires_, grid_);
}

WindowedField::WindowedField(FieldModelPtr inner, double z_min, double z_max)
    : inner_(std::move(inner)), z_min_(z_min), z_max_(z_max) {
  if (!(z_min_ < z_max_)) throw std::invalid_argument("WindowedField: empty window");
}

FieldSample WindowedField::sample(const Vec3& r) const {
  if (r.z() < z_min_ || r.z() > z_max_) return {};
  return inner_->sample(r);
}

ComposedField::ComposedField(std::vector<FieldModelPtr> parts) : parts_(std::move(parts)) {}

FieldSample ComposedField::sample(const Vec3& r) const {
  FieldSample total;
  for (const auto& part : parts_) total += part->sample(r);
  return total;
}

FieldModelPtr compose_fields(std::vector<FieldModelPtr> models) {
  return std::make_shared<ComposedField>(std::move(models));
}

// ---------------------------------------------------------------------------

namespace {

Mat3 central_difference_jacobian(const FieldModel& model, const Vec3& r, double h) {
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    Vec3 step = Vec3::Zero();
    step[j] = h;
    J.col(j) = (model.sample(r + step).B - model.sample(r - step).B) / (2.0 * h);
  }
  return J;
}

}  // namespace

MaxwellResiduals check_maxwell(const FieldModel& model, const Vec3& r, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("check_maxwell: step must be positive");
  const Mat3 coarse = central_difference_jacobian(model, r, h);
  const Mat3 fine = central_difference_jacobian(model, r, 0.5 * h);
  const Mat3 J_fd = (4.0 * fine - coarse) / 3.0;
  const Mat3 J = model.sample(r).J;

  MaxwellResiduals res;
  res.divergence = std::abs(J_fd.trace());
  res.curl = Vec3(J_fd(2, 1) - J_fd(1, 2), J_fd(0, 2) - J_fd(2, 0), J_fd(1, 0) - J_fd(0, 1));
  res.jacobian_error = (J_fd - J).cwiseAbs().maxCoeff();
  res.jacobian_norm = J.norm();
  return res;
}

}  // namespace sgbeam
