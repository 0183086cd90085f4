#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sgbeam/ensemble.hpp"
#include "sgbeam/estimators.hpp"

using namespace sgbeam;
using namespace sgbeam::testing;
using namespace sgbeam::units;

namespace {

// Reference 700 m/s source beam.
SourceParams table1_source(SpinPreparation spin = SpinPreparation::MixedX) {
  SourceParams s;
  s.mean_speed = 700.0;
  s.axial_spread = 0.7;
  s.divergence = 215 * urad;
  s.emittance_1d = emittance_from_nm_mrad_sqrt_ev(std::sqrt(0.13));
  s.spin = spin;
  return s;
}

LaunchFrame fig4_frame() { return LaunchFrame{kFig4LaunchHeight, kFig4Incidence, 0.0, 0.0}; }

AdiabaticParams fig4_params(double sx = 0.5) {
  return AdiabaticParams::from_grating(kFig4Bias, fig4_grating(),
                                       kFig4Speed * std::cos(kFig4Incidence), sx);
}

EnsembleSetup reduced_setup() {
  EnsembleSetup s;
  s.engine = Engine::Adiabatic;
  s.adiabatic = fig4_params();
  s.image = surface_image();
  s.options = adiabatic_default_options();
  s.options.z_exit = kFig4Length;
  s.options.y_min = 2 * um;
  s.options.t_max = 100 * us;
  s.workers = 2;
  return s;
}

struct Stats {
  double mean = 0, sd = 0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.mean += x;
  s.mean /= xs.size();
  for (double x : xs) s.sd += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(s.sd / (xs.size() - 1));
  return s;
}

double quantile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  return xs[static_cast<std::size_t>(q * (xs.size() - 1))];
}

}  // namespace

TEST(Sampling, ZeroSpreadGivesIdenticalKinematics) {
  SourceParams src = table1_source(SpinPreparation::PlusX);
  src.axial_spread = 0;
  src.divergence = 0;
  const auto states = sample_initial_states(src, fig4_frame(), 50, 7);
  for (const auto& s : states) {
    EXPECT_EQ(s.r, states[0].r);
    EXPECT_EQ(s.v, states[0].v);
    EXPECT_EQ(s.S, Vec3(0.5, 0, 0));
  }
  EXPECT_NEAR(states[0].v.norm(), 700.0, 1e-12);
  EXPECT_NEAR(std::atan2(-states[0].v.y(), states[0].v.z()), kFig4Incidence, 1e-15);
  EXPECT_EQ(states[0].r.y(), kFig4LaunchHeight);
}

TEST(Sampling, MomentsMatchTable1Spreads) {
  const std::size_t n = 10000;
  const SourceParams src = table1_source();
  const auto states = sample_initial_states(src, fig4_frame(), n, 2024);
  std::vector<double> speed, ay, ax, y;
  for (const auto& s : states) {
    speed.push_back(s.v.norm());
    ay.push_back(std::atan2(-s.v.y(), std::hypot(s.v.x(), s.v.z())));
    ax.push_back(std::asin(s.v.x() / s.v.norm()));
    y.push_back(s.r.y());
  }
  const double rn = std::sqrt(static_cast<double>(n));
  const Stats sv = stats(speed), sy = stats(ay), sx = stats(ax), sp = stats(y);
  EXPECT_NEAR(sv.mean, 700.0, 3 * 0.7 / rn);
  EXPECT_NEAR(sy.mean, kFig4Incidence, 3 * 215e-6 / rn);
  EXPECT_NEAR(sx.mean, 0.0, 3 * 215e-6 / rn);
  EXPECT_LT(std::abs(sv.sd / 0.7 - 1), 0.05);
  EXPECT_LT(std::abs(sy.sd / 215e-6 - 1), 0.05);
  EXPECT_LT(std::abs(sx.sd / 215e-6 - 1), 0.05);
  EXPECT_LT(std::abs(sp.sd / src.position_spread() - 1), 0.05);
}

TEST(Sampling, NarrowedSpreads) {
  SourceParams src = table1_source();
  src.spread_scale = 0.7;
  const auto states = sample_initial_states(src, fig4_frame(), 10000, 5);
  std::vector<double> speed;
  for (const auto& s : states) speed.push_back(s.v.norm());
  EXPECT_LT(std::abs(stats(speed).sd / (0.7 * 0.7) - 1), 0.05);
}

TEST(Sampling, PerIonStreamsIndependentOfBatchSize) {
  const auto a = sample_initial_states(table1_source(), fig4_frame(), 10, 99);
  const auto b = sample_initial_states(table1_source(), fig4_frame(), 100, 99);
  const auto c = sample_initial_states(table1_source(), fig4_frame(), 10, 100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].r, b[i].r);
    EXPECT_EQ(a[i].v, b[i].v);
    EXPECT_NE(a[i].v, c[i].v);
  }
}

TEST(Sampling, MixedSpinAlternates) {
  const auto s = sample_initial_states(table1_source(), fig4_frame(), 6, 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].S, Vec3(i % 2 == 0 ? 0.5 : -0.5, 0, 0));
  }
  EXPECT_EQ(parse_spin_preparation("minus_y"), SpinPreparation::MinusY);
  EXPECT_THROW(parse_spin_preparation("up"), std::invalid_argument);
}

TEST(Sampling, InvalidSource) {
  SourceParams src = table1_source();
  src.axial_spread = -1;
  EXPECT_THROW(sample_initial_states(src, fig4_frame(), 1, 0), std::invalid_argument);
  src = table1_source();
  src.emittance_1d = 0.5 * minimum_emittance_1d(kCalcium40Mass);
  EXPECT_THROW(src.validate(), std::invalid_argument);
  EXPECT_THROW(sample_initial_states(table1_source(), fig4_frame(), 0, 0), std::invalid_argument);
  EXPECT_THROW(sample_initial_states(table1_source(), LaunchFrame{-1, 0.05}, 1, 0),
               std::invalid_argument);
}

TEST(Focusing, ZeroSpreadSourceLandsExactlyOnTarget) {
  SourceParams src = table1_source();
  src.axial_spread = 0;
  src.divergence = 0;
  const FocusSpec focus{20 * um, 0.25 * um, true};
  const auto states =
      focus_initial_states(src, fig4_frame(), focus, fig4_params(), surface_image(), 4, 3);
  for (const auto& s : states) {
    const ReducedLaunch l{s.r.y(), s.v.y(), s.v.z()};
    AdiabaticParams p = fig4_params(s.S.x());
    p.vz0 = s.v.z();
    const auto tp = turning_point(l, p, surface_image(), 1 * um);
    ASSERT_TRUE(tp);
    EXPECT_NEAR(*tp, 20 * um, 1e-12);
  }
  // The S = 0 focus reproduces the fig4.cfg launch height.
  const auto yl = focused_launch_height(20 * um, states[0].v.y(), states[0].v.z(),
                                        fig4_params(0.0), surface_image());
  ASSERT_TRUE(yl);
  EXPECT_NEAR(*yl, kFig4LaunchHeight, 0.01 * um);
}

TEST(Focusing, Table1SpreadsStayInBand) {
  const std::size_t n = 1000;
  const FocusSpec focus{20 * um, 0.25 * um, true};
  const auto states = focus_initial_states(table1_source(), fig4_frame(), focus, fig4_params(),
                                           surface_image(), n, 11);
  const auto res = run_ensemble(states, reduced_setup(), 11);
  std::size_t inside = 0;
  for (const auto& r : res.records) {
    inside += std::abs(r.closest_approach - focus.target) <= focus.tolerance;
  }
  EXPECT_GE(inside, 0.95 * n);
  EXPECT_EQ(res.crashed, 0u);
}

TEST(Focusing, UnreachableTargetsNameTheCondition) {
  const FocusSpec low_bias_target{15 * um, 0.25 * um, true};
  const auto weak = AdiabaticParams::from_grating(10 * gauss, fig4_grating(), 699.0, 0.5);
  try {
    focus_initial_states(table1_source(), fig4_frame(), low_bias_target, weak, surface_image(),
                         4, 1);
    FAIL() << "expected an unreachable-target error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("crash_bias_minimum"), std::string::npos);
  }
  // Just above the crash-bias height but below the -x barrier top (16.3 um).
  const FocusSpec under_barrier{16.1 * um, 0.25 * um, true};
  try {
    focus_initial_states(table1_source(SpinPreparation::MinusX), fig4_frame(), under_barrier,
                         fig4_params(), surface_image(), 4, 1);
    FAIL() << "expected an unreachable-target error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("barrier"), std::string::npos);
  }
  EXPECT_THROW(FocusSpec({20 * um, 0.0, true}).validate(), std::invalid_argument);
}

TEST(Ensemble, UnfocusedBeamSpreadsAndDoesNotResolve) {
  const std::size_t n = 2000;
  const auto states = sample_initial_states(table1_source(), fig4_frame(), n, 8);
  const auto res = run_ensemble(states, reduced_setup(), 8);
  ASSERT_EQ(res.records.size(), n);
  std::vector<double> closest;
  for (const auto& r : res.records) {
    if (r.status == TrajectoryStatus::ExitedRegion) closest.push_back(r.closest_approach);
  }
  // Several micrometres of closest-approach spread.
  EXPECT_GT(quantile(closest, 0.75) - quantile(closest, 0.25), 2 * um);
  EXPECT_LT(res.resolution_ratio, 1.0);
  EXPECT_GT(res.crashed, 0u);
  EXPECT_LT(res.crashed, n);
}

TEST(Ensemble, FocusingImprovesResolution) {
  const std::size_t n = 2000;
  const FocusSpec focus{20 * um, 0.25 * um, true};
  const auto plain = run_ensemble(sample_initial_states(table1_source(), fig4_frame(), n, 9),
                                  reduced_setup(), 9);
  const auto focused = run_ensemble(
      focus_initial_states(table1_source(), fig4_frame(), focus, fig4_params(),
                           surface_image(), n, 9),
      reduced_setup(), 9);
  EXPECT_GT(focused.resolution_ratio, 1.0);
  EXPECT_GT(focused.resolution_ratio, plain.resolution_ratio);
}

TEST(Ensemble, IdenticalIonsReproduceSingleTrajectories) {
  SourceParams src = table1_source();
  src.axial_spread = 0;
  src.divergence = 0;
  const auto states = sample_initial_states(src, fig4_frame(), 6, 0);
  const auto res = run_ensemble(states, reduced_setup());
  ASSERT_EQ(res.spins.size(), 2u);
  for (const auto& s : res.spins) EXPECT_EQ(s.angle_spread, 0.0);

  const auto setup = reduced_setup();
  double angle[2];
  for (int k = 0; k < 2; ++k) {
    AdiabaticParams p = fig4_params(k == 0 ? 0.5 : -0.5);
    p.vz0 = states[0].v.z();
    const auto tr = integrate_adiabatic({states[0].r.y(), states[0].v.y(), states[0].v.z()}, p,
                                        surface_image(), setup.options);
    angle[k] = std::atan2(tr.final().vy, tr.final().vz);
  }
  const SpinSummary& plus = res.spins[0].label == "+x" ? res.spins[0] : res.spins[1];
  const SpinSummary& minus = res.spins[0].label == "+x" ? res.spins[1] : res.spins[0];
  EXPECT_EQ(plus.mean_angle, angle[0]);
  EXPECT_EQ(minus.mean_angle, angle[1]);
  EXPECT_NEAR(plus.mean_angle - minus.mean_angle, 10.8e-3, 0.5e-3);
  EXPECT_TRUE(std::isinf(res.resolution_ratio));
}

TEST(Ensemble, SpinPopulationsMirrorAboutSpinFreeMean) {
  // Exchanging the spins mirrors the final v_y about the S = 0 value, to the
  // extent that the SG term acts as a small perturbation.
  SourceParams src = table1_source();
  src.spread_scale = 0.3;
  const auto states = sample_initial_states(src, fig4_frame(), 400, 21);
  auto neutral = states;
  for (auto& s : neutral) s.S = Vec3::Zero();
  const auto res = run_ensemble(states, reduced_setup());
  const auto ref = run_ensemble(neutral, reduced_setup());
  double plus = 0, minus = 0, zero = 0;
  int np = 0, nm = 0, nz = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (res.records[i].status != TrajectoryStatus::ExitedRegion) continue;
    if (ref.records[i].status != TrajectoryStatus::ExitedRegion) continue;
    const double vy = res.records[i].final.v.y();
    (i % 2 == 0 ? plus : minus) += vy;
    (i % 2 == 0 ? np : nm) += 1;
    zero += ref.records[i].final.v.y();
    ++nz;
  }
  plus /= np;
  minus /= nm;
  zero /= nz;
  const double half_split = 0.5 * std::abs(plus - minus);
  EXPECT_GT(plus, zero);
  EXPECT_LT(minus, zero);
  EXPECT_LT(std::abs(0.5 * (plus + minus) - zero), 0.25 * half_split);
}

TEST(Ensemble, DeterministicAcrossWorkerCounts) {
  const auto states = sample_initial_states(table1_source(), fig4_frame(), 200, 77);
  auto one = reduced_setup();
  one.workers = 1;
  auto four = reduced_setup();
  four.workers = 4;
  const auto a = run_ensemble(states, one, 77);
  const auto b = run_ensemble(states, four, 77);
  const auto c = run_ensemble(sample_initial_states(table1_source(), fig4_frame(), 200, 77),
                              one, 77);
  ASSERT_EQ(a.spins.size(), b.spins.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].final.v, b.records[i].final.v);
    EXPECT_EQ(a.records[i].status, b.records[i].status);
  }
  for (std::size_t k = 0; k < a.spins.size(); ++k) {
    EXPECT_EQ(a.spins[k].mean_angle, b.spins[k].mean_angle);
    EXPECT_EQ(a.spins[k].angle_spread, c.spins[k].angle_spread);
  }
  EXPECT_EQ(a.resolution_ratio, b.resolution_ratio);
  EXPECT_EQ(a.resolution_ratio, c.resolution_ratio);
}

TEST(Ensemble, FullEngineMatchesDirectIntegration) {
  const IonState s = fig4_launch(0.5);
  EnsembleSetup setup;
  setup.engine = Engine::Full;
  setup.field = fig4_field();
  setup.image = surface_image();
  setup.options = fig4_options();
  setup.options.max_step = 5e-9;  // keep the test short; exactness is what matters here
  setup.workers = 1;
  const auto res = run_ensemble({s}, setup);
  const auto tr = integrate(s, *setup.field, setup.image, setup.options);
  EXPECT_EQ(res.records[0].final.v, tr.final().v);
  EXPECT_EQ(res.records[0].closest_approach, tr.diagnostics.min_height);
  EXPECT_EQ(res.records[0].status, TrajectoryStatus::ExitedRegion);
}

TEST(Ensemble, CrashesAreRecordedPerIon) {
  auto states = sample_initial_states(table1_source(SpinPreparation::MinusX), fig4_frame(), 4, 2);
  states[1].v.y() = -80.0;  // far too steep: reaches the surface
  const auto res = run_ensemble(states, reduced_setup());
  EXPECT_EQ(res.records[1].status, TrajectoryStatus::Crashed);
  EXPECT_EQ(res.crashed, 1u);
  EXPECT_EQ(res.spins.at(0).crashed, 1u);
  EXPECT_EQ(res.resolution_ratio, 0.0);  // single spin population

  EXPECT_THROW(run_ensemble({}, reduced_setup()), std::invalid_argument);
  EnsembleSetup bare;
  bare.engine = Engine::Full;
  EXPECT_THROW(run_ensemble(states, bare), std::invalid_argument);
}

TEST(Ensemble, HistogramsCountSurvivors) {
  const auto res = run_ensemble(sample_initial_states(table1_source(), fig4_frame(), 300, 4),
                                reduced_setup());
  const auto hists = velocity_histograms(res, 20, 30);
  ASSERT_EQ(hists.size(), 2u);
  for (const auto& h : hists) {
    long total = 0;
    for (long c : h.counts) total += c;
    const auto& s = h.label == res.spins[0].label ? res.spins[0] : res.spins[1];
    EXPECT_EQ(static_cast<std::size_t>(total), s.count - s.crashed - s.failed);
    EXPECT_EQ(h.counts.size(), 600u);
  }
}

TEST(ClosestApproach, BranchesOrderedAndMonotone) {
  const auto curve = closest_approach_curve(table1_source(), fig4_frame(), fig4_params(),
                                            surface_image(), 30.0, 37.7, 41, 1 * um);
  ASSERT_EQ(curve.size(), 82u);
  for (int i = 0; i < 41; ++i) {
    const auto& up = curve[i];
    const auto& down = curve[41 + i];
    ASSERT_EQ(up.vy0, down.vy0);
    ASSERT_FALSE(up.crashed);
    ASSERT_FALSE(down.crashed);
    // S_x0 = -1/2 feels the attractive SG force and comes closer.
    EXPECT_LT(down.closest, up.closest);
    if (i > 0) {
      EXPECT_LT(up.closest, curve[i - 1].closest);
      EXPECT_LT(down.closest, curve[41 + i - 1].closest);
    }
  }
}

TEST(ClosestApproach, ApproachesBarrierTopNearCrashThreshold) {
  const auto p = fig4_params(0.5);
  // Bisect the crash threshold in |v_y0| for this spin.
  double lo = 30.0, hi = 60.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double vz = std::sqrt(700.0 * 700.0 - mid * mid);
    AdiabaticParams q = p;
    q.vz0 = vz;
    (turning_point({kFig4LaunchHeight, -mid, vz}, q, surface_image(), 1 * um) ? lo : hi) = mid;
  }
  const auto curve = closest_approach_curve(table1_source(), fig4_frame(), p, surface_image(),
                                            lo - 1e-3, lo - 1e-9, 2, 1 * um);
  const double vz = std::sqrt(700.0 * 700.0 - lo * lo);
  AdiabaticParams q = p;
  q.vz0 = vz;
  const double vz_turn = vz + q.omega0 * (kFig4LaunchHeight - curve[1].closest);
  const auto balance = static_balance_height(vz_turn, q, surface_image(), 30 * um, 1 * um);
  ASSERT_TRUE(balance);
  EXPECT_GT(curve[0].closest, curve[1].closest);
  EXPECT_NEAR(curve[1].closest, *balance, 0.05 * um);
}

TEST(ClosestApproach, CrashTruncatesBranch) {
  const auto curve = closest_approach_curve(table1_source(), fig4_frame(), fig4_params(),
                                            surface_image(), 30.0, 80.0, 11, 1 * um);
  bool seen = false;
  for (int i = 0; i < 11; ++i) {
    if (curve[i].crashed) seen = true;
    if (seen) {
      EXPECT_TRUE(curve[i].crashed);
      EXPECT_TRUE(std::isnan(curve[i].closest));
    }
  }
  EXPECT_TRUE(seen);
  EXPECT_THROW(closest_approach_curve(table1_source(), fig4_frame(), fig4_params(),
                                      surface_image(), 40.0, 30.0, 5, 1 * um),
               std::invalid_argument);
}
