#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "sgbeam/constants.hpp"
#include "sgbeam/fields.hpp"
#include "sgbeam/units.hpp"

using namespace sgbeam;
using namespace sgbeam::units;

namespace {

constexpr double kPi = codata::pi;

MultipoleParams fig2_multipole() {
  return MultipoleParams{-1.3, -0.018, 0.72, 75 * um};
}

GratingParams table2_grating() {
  GratingParams p;
  p.current = 1.0;
  p.width = 40 * um;
  p.thickness = 2 * um;
  p.pitch = 50 * um;
  p.n_max = 9;
  return p;
}

TwoWireParams table2_wire_pair() {
  TwoWireParams p;
  p.current = 100 * mA;
  p.half_separation = 1 * um;
  p.width = 0.5 * um;
  p.thickness = 0.5 * um;
  p.length = 100 * um;
  return p;
}

// Scalar potential written out independently of the library.
double multipole_potential(const Vec3& r, const MultipoleParams& p) {
  const double x = r.x(), y = r.y(), z = r.z();
  return p.a2 / (2 * p.y0) * std::sqrt(15 / (4 * kPi)) * x * y +
         p.a3 / (3 * p.y0 * p.y0) * std::sqrt(21 / (32 * kPi)) * x * (4 * z * z - x * x - y * y) +
         p.a4 / (4 * p.y0 * p.y0 * p.y0) * std::sqrt(315 / (16 * kPi)) * x * y * (x * x - y * y);
}

void expect_maxwell_clean(const FieldModel& model, const Vec3& r, double h, double rel) {
  const MaxwellResiduals res = check_maxwell(model, r, h);
  const double scale = res.jacobian_norm;
  ASSERT_GT(scale, 0.0);
  EXPECT_LT(res.divergence / scale, rel) << "at " << r.transpose();
  EXPECT_LT(res.curl.norm() / scale, rel) << "at " << r.transpose();
  EXPECT_LT(res.jacobian_error / scale, rel) << "at " << r.transpose();
}

}  // namespace

TEST(Multipole, FieldIsMinusGradientOfPotential) {
  const auto p = fig2_multipole();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-60 * um, 60 * um);
  for (int i = 0; i < 50; ++i) {
    const Vec3 r(u(rng), u(rng), 4 * u(rng));
    const double h = 1e-9;
    Vec3 grad;
    for (int j = 0; j < 3; ++j) {
      Vec3 e = Vec3::Zero();
      e[j] = h;
      grad[j] = (multipole_potential(r + e, p) - multipole_potential(r - e, p)) / (2 * h);
    }
    const Vec3 B = multipole_field(r, p).B;
    EXPECT_LT((B + grad).norm(), 1e-6 * std::max(B.norm(), 1e-3));
  }
}

TEST(Multipole, QuadrupoleGradientNearAxis) {
  MultipoleParams p{-1.3, 0.0, 0.0, 75 * um};
  const double g = p.a2 / (2 * p.y0) * std::sqrt(15 / (4 * kPi));
  EXPECT_DOUBLE_EQ(p.quadrupole_gradient(), g);
  const FieldSample s = multipole_field(Vec3(1 * um, 2 * um, 0.0), p);
  EXPECT_NEAR(s.B.x(), -g * 2 * um, 1e-12);
  EXPECT_NEAR(s.B.y(), -g * 1 * um, 1e-12);
  EXPECT_NEAR(std::abs(g), 1.3 / 150e-6 * std::sqrt(15 / (4 * kPi)), 1e-6);
}

TEST(Multipole, HexapoleAxisFieldMagnitude) {
  const auto p = fig2_multipole();
  for (double z : {10 * um, 100 * um, 300 * um}) {
    const double expected = std::abs(p.a3) / 3 * std::sqrt(21 / (2 * kPi)) * z * z / (p.y0 * p.y0);
    EXPECT_NEAR(std::abs(multipole_axis_field(z, p)), expected, 1e-12 * expected);
    EXPECT_DOUBLE_EQ(multipole_field(Vec3(0, 0, z), p).B.x(), multipole_axis_field(z, p));
  }
}

TEST(Multipole, RejectsNonPositiveGap) {
  EXPECT_THROW(MultipoleField(MultipoleParams{1, 0, 0, 0}), std::invalid_argument);
}

TEST(LineCurrent, MagnitudeAndHandedness) {
  const double I = 2.0;
  const Vec3 r(0, 3 * um, 5 * um);
  const FieldSample s = line_current_field(r, Vec3::Zero(), Vec3::UnitX(), I);
  const double expected = codata::vacuum_permeability * I / (2 * kPi * std::sqrt(34.0) * um);
  EXPECT_NEAR(s.B.norm(), expected, 1e-12 * expected);
  // x-directed current seen from +y: field along +z.
  EXPECT_GT(s.B.z(), 0.0);
  EXPECT_NEAR(s.B.dot(Vec3::UnitX()), 0.0, 1e-20);
  EXPECT_THROW(line_current_field(Vec3(4, 0, 0), Vec3::Zero(), Vec3::UnitX(), I), DomainError);
}

TEST(TwoWire, FieldVanishesOnAxisWithQuadrupoleGradient) {
  const auto p = table2_wire_pair();
  const FieldSample s = two_wire_field(Vec3(0, 0, 1 * um), p);
  EXPECT_LT(s.B.norm(), 1e-12);
  const double g = codata::vacuum_permeability * p.current / (kPi * p.half_separation * p.half_separation);
  EXPECT_NEAR(std::abs(s.J(0, 1)), g, 1e-9 * g);
  EXPECT_NEAR(std::abs(s.J(1, 0)), g, 1e-9 * g);
}

TEST(TwoWire, FilamentModelApproachesThinWireFarAway) {
  auto thin = table2_wire_pair();
  auto thick = thin;
  thick.model = WireModel::Filament;
  const Vec3 r(0.2 * um, 0.3 * um, 0);
  const Vec3 Bt = two_wire_field(r, thin).B;
  const Vec3 Bf = two_wire_field(r, thick).B;
  EXPECT_LT((Bt - Bf).norm() / Bt.norm(), 0.05);
  EXPECT_THROW(two_wire_field(Vec3(1 * um, 0, 0), thick), DomainError);
}

TEST(Grating, PotentialCoefficientsVanishForEvenHarmonics) {
  const auto p = table2_grating();
  for (int n = 2; n <= 10; n += 2) EXPECT_EQ(grating_potential_coefficient(p, n), 0.0);
  EXPECT_GT(grating_potential_coefficient(p, 1), 0.0);
}

TEST(Grating, FirstHarmonicAtSurfaceFromClosedForm) {
  // kappa A_1 = (2 mu0 I / pi) kappa sin(kappa w / 2)/(kappa w) (1 - e^{-kappa t})/(kappa t)
  const auto p = table2_grating();
  const double k = kPi / p.pitch;
  const double expected = 2 * codata::vacuum_permeability * p.current / kPi * k *
                          std::sin(k * p.width / 2) / (k * p.width) *
                          (1 - std::exp(-k * p.thickness)) / (k * p.thickness);
  EXPECT_NEAR(grating_harmonic_amplitude(p, 1), expected, 1e-12 * expected);
  EXPECT_NEAR(expected / gauss, 178.7, 0.1);
}

TEST(Grating, SurfaceAmplitudeOverrideGives102GaussAt20um) {
  auto p = table2_grating();
  p.surface_amplitude = 360 * gauss;
  EXPECT_NEAR(grating_harmonic_amplitude(p, 1), 360 * gauss, 1e-15);
  const double b20 = grating_field_fourier(20 * um, 0.3 * um, p).B.norm();
  EXPECT_NEAR(b20 / gauss, 102.0, 1.5);
}

TEST(Grating, SingleHarmonicHasConstantMagnitudeAlongZ) {
  auto p = table2_grating();
  p.n_max = 1;
  const double y = 15 * um;
  const double ref = grating_field_fourier(y, 0.0, p).B.norm();
  for (double z = 0; z < 100 * um; z += 7 * um) {
    EXPECT_NEAR(grating_field_fourier(y, z, p).B.norm(), ref, 1e-12 * ref);
  }
}

TEST(Grating, FourierMatchesBiotSavartOracle) {
  const auto p = table2_grating();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uy(10 * um, 60 * um), uz(-p.pitch, p.pitch);
  for (int i = 0; i < 40; ++i) {
    const double y = uy(rng), z = uz(rng);
    const Vec3 Bf = grating_field_fourier(y, z, p).B;
    // Averaging arrays of 401 and 403 wires halves the current of the edge wires.
    const Vec3 Bb = 0.5 * (grating_field_biot_savart(Vec3(0, y, z), p, 401).B +
                           grating_field_biot_savart(Vec3(0, y, z), p, 403).B);
    EXPECT_LT((Bf - Bb).norm() / Bf.norm(), 0.02) << "y=" << y << " z=" << z;
  }
}

TEST(Grating, AdaptiveBiotSavartConverges) {
  const auto p = table2_grating();
  FilamentGrid grid;
  const Vec3 r(0, 12 * um, 4 * um);
  const Vec3 B = grating_field_biot_savart_adaptive(r, p, 201, 1e-4, &grid).B;
  const Vec3 fine = grating_field_biot_savart(r, p, 201, FilamentGrid{512, 64}).B;
  EXPECT_LT((B - fine).norm() / fine.norm(), 1e-3);
  EXPECT_GE(grid.along_width, 16);
}

TEST(Grating, DomainErrors) {
  const auto p = table2_grating();
  EXPECT_THROW(grating_field_fourier(-1 * um, 0, p), DomainError);
  EXPECT_THROW(grating_field_biot_savart(Vec3(0, -1 * um, 0), p, 11), DomainError);
  EXPECT_NO_THROW(grating_field_biot_savart(Vec3(0, -1 * um, 25 * um), p, 11));
  auto bad = p;
  bad.n_max = 4;
  EXPECT_THROW(GratingFourierField{bad}, std::invalid_argument);
}

TEST(Maxwell, AnalyticJacobiansAreTracelessAndSymmetric) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const MultipoleField multipole(fig2_multipole());
  const GratingFourierField grating(table2_grating());
  const TwoWireField wires(table2_wire_pair());
  for (int i = 0; i < 200; ++i) {
    const Vec3 rm(50 * um * u(rng), 50 * um * u(rng), 300 * um * u(rng));
    const Vec3 rg(0, 30 * um * (1 + u(rng)), 100 * um * u(rng));
    const Vec3 rw(0.4 * um * u(rng), 0.4 * um * u(rng), 0);
    for (const Mat3& J : {multipole.sample(rm).J, grating.sample(rg).J, wires.sample(rw).J}) {
      EXPECT_LT(std::abs(J.trace()), 1e-9 * J.norm());
      EXPECT_LT((J - J.transpose()).norm(), 1e-9 * J.norm());
    }
  }
}

TEST(Maxwell, FiniteDifferenceResidualsAtRandomPoints) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  const MultipoleField multipole(fig2_multipole());
  const GratingFourierField grating(table2_grating());
  const TwoWireField wires(table2_wire_pair());
  const GratingBiotSavartField oracle(table2_grating(), 41, FilamentGrid{8, 2});
  for (int i = 0; i < 100; ++i) {
    expect_maxwell_clean(multipole, Vec3(50 * um * u(rng), 50 * um * u(rng), 300 * um * u(rng)),
                         1 * um, 1e-6);
    expect_maxwell_clean(grating, Vec3(0, 30 * um * (1 + u(rng)) + 1 * um, 100 * um * u(rng)),
                         10 * nm, 1e-6);
    expect_maxwell_clean(wires, Vec3(0.4 * um * u(rng), 0.4 * um * u(rng), 0), 1 * nm, 1e-6);
    expect_maxwell_clean(oracle, Vec3(0, 30 * um * (1 + u(rng)) + 1 * um, 100 * um * u(rng)),
                         10 * nm, 1e-6);
  }
}

TEST(Composition, WindowAndSuperposition) {
  auto grating = std::make_shared<GratingFourierField>(table2_grating());
  auto bias = std::make_shared<UniformField>(Vec3(20 * gauss, 0, 0));
  auto windowed = std::make_shared<WindowedField>(grating, 0.0, 20 * mm);
  auto total = compose_fields({bias, windowed});
  const Vec3 inside(0, 20 * um, 3 * um), outside(0, 20 * um, -3 * um);
  EXPECT_LT((total->sample(inside).B - grating->sample(inside).B - Vec3(20 * gauss, 0, 0)).norm(),
            1e-15);
  EXPECT_LT((total->sample(outside).B - Vec3(20 * gauss, 0, 0)).norm(), 1e-15);
  EXPECT_EQ(total->sample(outside).J.norm(), 0.0);
  EXPECT_THROW(WindowedField(grating, 1.0, 1.0), std::invalid_argument);
}
