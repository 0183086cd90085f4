#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sgbeam/constants.hpp"
#include "sgbeam/dynamics.hpp"
#include "sgbeam/kinematics.hpp"
#include "sgbeam/units.hpp"

using namespace sgbeam;
using namespace sgbeam::units;
using namespace sgbeam::testing;

namespace {

const double kGamma = Ion::calcium40().gyromagnetic_ratio();

// Rotation of v about the unit axis n by angle a (Rodrigues).
Vec3 rotate(const Vec3& v, const Vec3& n, double a) {
  return v * std::cos(a) + n.cross(v) * std::sin(a) + n * n.dot(v) * (1 - std::cos(a));
}

}  // namespace

TEST(Rhs, PurePrecessionInUniformField) {
  const UniformField field(Vec3(20 * gauss, 0, 0));
  IonState s;
  s.S = Vec3(0, 0.5, 0);
  const Derivative d = rhs(s, field, ImageParams{});
  const double omega0 = larmor_frequency(20 * gauss);
  EXPECT_NEAR(d.dS.norm(), omega0 / 2, 1e-9 * omega0);
  EXPECT_NEAR(d.dS.x(), 0.0, 1e-30);
  EXPECT_EQ(d.dv.norm(), 0.0);
}

TEST(Rhs, MatchesSingleHarmonicComponentEquations) {
  auto g = table2_grating();
  g.n_max = 1;
  g.surface_amplitude = 360 * gauss;
  const double B0 = 20 * gauss, k = g.kappa(), B1 = 360 * gauss;
  const double m = kCalcium40Mass, e = codata::elementary_charge;
  const double u = kElectronGFactor * codata::bohr_magneton * k / e;
  EXPECT_NEAR(u * e / (kElectronGFactor * codata::bohr_magneton), k, 1e-12 * k);
  EXPECT_NEAR(u, 7.28, 0.01);

  const auto field = fig4_field(g);
  const ImageParams img = surface_image();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (int i = 0; i < 50; ++i) {
    IonState s;
    s.r = Vec3(uni(rng) * um, (30 + 20 * uni(rng)) * um, 200 * um * uni(rng));
    s.v = Vec3(uni(rng), 40 * uni(rng), 700 + uni(rng));
    s.S = 0.5 * Vec3(uni(rng), uni(rng), uni(rng)).normalized();
    const double y = s.r.y(), c = std::cos(k * s.r.z()), sn = std::sin(k * s.r.z());
    const double W0 = kGamma * B0, W1 = kGamma * B1 * std::exp(-k * y);
    const double w0 = e * B0 / m, w1 = e * B1 * std::exp(-k * y) / m;
    const double a_im = -e * e / (16 * codata::pi * codata::vacuum_permittivity * m * y * y);
    const auto& S = s.S;
    const auto& v = s.v;
    const Vec3 dS(-W1 * S.y() * c - W1 * S.z() * sn, -W0 * S.z() + W1 * S.x() * c,
                  W0 * S.y() + W1 * S.x() * sn);
    const Vec3 dv(w1 * v.y() * c + w1 * v.z() * sn,
                  w0 * v.z() + a_im - w1 * v.x() * c + w1 * u * (S.z() * c - S.y() * sn),
                  -w0 * v.y() - w1 * v.x() * sn + w1 * u * (S.y() * c + S.z() * sn));
    const Derivative d = rhs(s, *field, img);
    EXPECT_LT((d.dS - dS).norm(), 1e-10 * dS.norm());
    EXPECT_LT((d.dv - dv).norm(), 1e-10 * dv.norm());
    EXPECT_EQ(d.dr, s.v);
  }
}

TEST(Rhs, FieldFreeLeavesOnlyImage) {
  const UniformField zero(Vec3::Zero());
  IonState s;
  s.r = Vec3(0, 10 * um, 0);
  s.v = Vec3(1, 2, 3);
  s.S = Vec3(0.5, 0, 0);
  const Derivative d = rhs(s, zero, surface_image());
  EXPECT_EQ(d.dS.norm(), 0.0);
  EXPECT_EQ(d.dv.x(), 0.0);
  EXPECT_LT(d.dv.y(), 0.0);
}

TEST(Integrate, UniformFieldPrecessionMatchesRotationOracle) {
  const double B = 20 * gauss;
  const UniformField field(Vec3(B, 0, 0));
  const double omega = larmor_frequency(B);
  IonState s;
  s.S = Vec3(0, 0, 0.5);
  IntegratorOptions o;
  o.t_max = 2 * codata::pi / omega;
  o.record_stride = 1;
  o.renormalise_spin = false;
  const Trajectory tr = integrate(s, field, ImageParams{}, o);
  ASSERT_EQ(tr.status, TrajectoryStatus::CompletedWindow);
  EXPECT_NEAR(tr.final().t, o.t_max, 1e-20);
  EXPECT_LT((tr.final().S - s.S).norm(), 1e-8);
  for (const auto& st : tr.samples) {
    // dS/dt = Omega x_hat x S: right-handed rotation about +x.
    EXPECT_LT((st.S - rotate(s.S, Vec3::UnitX(), omega * st.t)).norm(), 1e-8);
  }
}

TEST(Integrate, FieldFreeFlightIsStraight) {
  const UniformField zero(Vec3::Zero());
  IonState s;
  s.r = Vec3(1 * um, 2 * um, 3 * um);
  s.v = Vec3(-3, 40, 700);
  s.S = Vec3(0.5, 0, 0);
  IntegratorOptions o;
  o.t_max = 10 * us;
  o.record_stride = 1;
  const Trajectory tr = integrate(s, zero, ImageParams{}, o);
  for (const auto& st : tr.samples) {
    EXPECT_LT((st.r - (s.r + s.v * st.t)).norm(), 1e-12 * st.r.norm());
    EXPECT_EQ(st.v, s.v);
  }
}

TEST(Integrate, TimestampsStrictlyIncreaseAndEndpointRecorded) {
  const auto field = fig4_field();
  auto o = fig4_options();
  o.record_stride = 37;
  const Trajectory tr = integrate(fig4_launch(0.5), *field, surface_image(), o);
  ASSERT_GT(tr.samples.size(), 10u);
  for (size_t i = 1; i < tr.samples.size(); ++i) {
    EXPECT_GT(tr.samples[i].t, tr.samples[i - 1].t);
  }
  EXPECT_EQ(tr.status, TrajectoryStatus::ExitedRegion);
  EXPECT_NEAR(tr.final().r.z(), kFig4Length, 1e-12);
  EXPECT_GT(tr.diagnostics.min_height, *o.y_min);
}

TEST(Integrate, CrashIntoSurface) {
  const auto field = fig4_field();
  auto o = fig4_options();
  IonState s = fig4_launch(0.5);
  s.r.y() = 30 * um;
  s.v = Vec3(0, -50, 700);
  const Trajectory tr = integrate(s, *field, surface_image(), o);
  EXPECT_EQ(tr.status, TrajectoryStatus::Crashed);
  EXPECT_LT(tr.diagnostics.min_height, *o.y_min);
}

TEST(Integrate, CrashWithoutHeightThresholdComesFromImageDomain) {
  const UniformField zero(Vec3::Zero());
  IonState s;
  s.r = Vec3(0, 5 * um, 0);
  s.v = Vec3(0, -10, 0);
  IntegratorOptions o;
  o.t_max = 10 * us;
  const Trajectory tr = integrate(s, zero, surface_image(), o);
  EXPECT_EQ(tr.status, TrajectoryStatus::Crashed);
}

TEST(Integrate, SpinNormDriftWithoutRenormalisation) {
  const auto field = fig4_field();
  auto o = fig4_options();
  o.renormalise_spin = false;
  for (double sx : {0.5, -0.5}) {
    const Trajectory tr = integrate(fig4_launch(sx), *field, surface_image(), o);
    EXPECT_LT(tr.diagnostics.max_spin_norm_drift, 1e-7);
    EXPECT_LT(std::abs(tr.final().S.norm() - 0.5), 1e-7);
  }
}

TEST(Integrate, EnergyConservedInMultipoleField) {
  const MultipoleField field(MultipoleParams{-1.3, -0.018, 0.72, 75 * um});
  IonState s;
  s.r = Vec3(2 * um, -3 * um, 0);
  s.v = Vec3(0.1, 0.2, 694.9);
  s.S = 0.5 * Vec3(1, 1, 0).normalized();
  IntegratorOptions o;
  o.z_exit = 400 * um;
  const Trajectory tr = integrate(s, field, ImageParams{}, o);
  EXPECT_EQ(tr.status, TrajectoryStatus::ExitedRegion);
  EXPECT_LT(tr.diagnostics.energy_drift, 1e-9);
  EXPECT_NEAR(tr.diagnostics.final_energy, conserved_energy(tr.final(), field, ImageParams{}),
              1e-30);
}

TEST(Integrate, UniformFieldConservesKineticEnergy) {
  const UniformField field(Vec3(1e-2, 3e-3, -2e-3));
  IonState s;
  s.v = Vec3(10, -20, 700);
  s.S = Vec3(0.2, 0.3, 0.1).normalized() * 0.5;
  IntegratorOptions o;
  o.t_max = 5 * us;
  o.record_stride = 1;
  // Runge-Kutta steps keep the component along a constant B exactly;
  // renormalisation would rescale it.
  o.renormalise_spin = false;
  const Trajectory tr = integrate(s, field, ImageParams{}, o);
  const double sb0 = s.S.dot(field.sample(s.r).B);
  for (const auto& st : tr.samples) {
    EXPECT_NEAR(st.v.squaredNorm() / s.v.squaredNorm(), 1.0, 1e-10);
    EXPECT_NEAR(st.S.dot(field.sample(st.r).B), sb0, 1e-12 * std::abs(sb0));
  }
}

TEST(Integrate, TimeReversalReturnsToStart) {
  auto field = std::make_shared<UniformField>(Vec3(20 * gauss, 5 * gauss, -3 * gauss));
  const ScaledField reversed(field, -1.0);
  IonState s;
  s.r = Vec3(1 * um, 2 * um, 3 * um);
  s.v = Vec3(5, -30, 700);
  s.S = 0.5 * Vec3(0.3, 0.9, -0.1).normalized();
  IntegratorOptions o;
  o.t_max = 1 * us;
  const Trajectory fwd = integrate(s, *field, ImageParams{}, o);
  IonState back = fwd.final();
  back.t = 0;
  back.v = -back.v;
  back.S = -back.S;
  const Trajectory bwd = integrate(back, reversed, ImageParams{}, o);
  EXPECT_LT((bwd.final().r - s.r).norm(), 1e-9);
  EXPECT_LT((bwd.final().v + s.v).norm(), 1e-9);
  EXPECT_LT((bwd.final().S + s.S).norm(), 1e-7);
}

TEST(Integrate, RejectsBadOptions) {
  const UniformField zero(Vec3::Zero());
  IntegratorOptions o;
  o.rel_tol = 0;
  EXPECT_THROW(integrate(IonState{}, zero, ImageParams{}, o), std::invalid_argument);
}

TEST(MultipoleScenario, ZeroAmplitudesFlyStraight) {
  IonState launch;
  launch.r = Vec3(1 * um, -1 * um, 0);
  launch.v = Vec3(0.2, 0.1, 700);
  const auto trs = run_multipole_scenario({Vec3(0.5, 0, 0), Vec3(0, -0.5, 0)}, launch,
                                          MultipoleParams{0, 0, 0, 75 * um}, 300 * um);
  ASSERT_EQ(trs.size(), 2u);
  for (const auto& tr : trs) {
    EXPECT_EQ(tr.status, TrajectoryStatus::ExitedRegion);
    const double t = tr.final().t;
    EXPECT_LT((tr.final().r - (launch.r + launch.v * t)).norm(), 1e-12 * tr.final().r.norm());
  }
}

TEST(MultipoleScenario, SymmetricQuadrupoleSplitsOppositeSpinsInX) {
  IonState launch;
  launch.v = Vec3(0, 0, kinetic_energy_to_speed(0.1 * eV, kCalcium40Mass));
  const auto trs = run_multipole_scenario({Vec3(0, 0.5, 0), Vec3(0, -0.5, 0)}, launch,
                                          MultipoleParams{-1.3, 0, 0.72, 75 * um}, 100 * um);
  const double a = trs[0].final().v.x(), b = trs[1].final().v.x();
  EXPECT_LT(a * b, 0.0);
  EXPECT_NEAR(a, -b, 1e-9 * std::abs(a));
}
