#include "sgbeam/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>

#include <boost/math/tools/roots.hpp>

#include "sgbeam/estimators.hpp"
#include "sgbeam/kinematics.hpp"

namespace sgbeam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::mt19937_64 ion_stream(std::uint64_t seed, std::size_t index) {
  const auto i = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
  return std::mt19937_64(seq);
}

std::string spin_label(const Vec3& S) {
  constexpr double kTol = 1e-12;
  const bool x_only = std::abs(S.y()) < kTol && std::abs(S.z()) < kTol && std::abs(S.x()) > kTol;
  const bool y_only = std::abs(S.x()) < kTol && std::abs(S.z()) < kTol && std::abs(S.y()) > kTol;
  if (x_only) return S.x() > 0 ? "+x" : "-x";
  if (y_only) return S.y() > 0 ? "+y" : "-y";
  return "other";
}

double split_angle(const Vec3& v, SplitPlane plane) {
  return plane == SplitPlane::Vertical ? std::atan2(v.y(), v.z()) : std::atan2(v.x(), v.z());
}

struct Moments {
  double n = 0, mean = 0, m2 = 0;
  void add(double x) {
    n += 1;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double sd() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

bool survived(TrajectoryStatus s) {
  return s == TrajectoryStatus::ExitedRegion || s == TrajectoryStatus::CompletedWindow;
}

IonRecord run_full(std::size_t i, const IonState& s, const EnsembleSetup& setup) {
  IonRecord rec;
  rec.index = i;
  rec.initial = s;
  const Trajectory tr = integrate(s, *setup.field, setup.image, setup.options, setup.ion);
  rec.final = tr.final();
  rec.status = tr.status;
  rec.closest_approach = tr.diagnostics.min_height;
  rec.steps = tr.diagnostics.accepted_steps;
  rec.energy_drift = tr.diagnostics.energy_drift;
  rec.message = tr.diagnostics.message;
  return rec;
}

IonRecord run_reduced(std::size_t i, const IonState& s, const EnsembleSetup& setup) {
  IonRecord rec;
  rec.index = i;
  rec.initial = s;
  AdiabaticParams p = *setup.adiabatic;
  p.Sx0 = s.S.x();
  p.vz0 = s.v.z();
  IntegratorOptions opts = setup.options;
  if (opts.z_exit) opts.z_exit = *opts.z_exit - s.r.z();
  const AdiabaticTrajectory tr =
      integrate_adiabatic(ReducedLaunch{s.r.y(), s.v.y(), s.v.z()}, p, setup.image, opts, setup.ion);
  const AdiabaticSample& last = tr.final();
  // The reduced state has no x motion beyond the initial drift and no lab-frame spin.
  rec.final.t = s.t + last.t;
  rec.final.r = Vec3(s.r.x() + s.v.x() * last.t, last.y, s.r.z() + last.z);
  rec.final.v = Vec3(s.v.x(), last.vy, last.vz);
  rec.final.S = s.S;
  rec.status = tr.status;
  rec.closest_approach = tr.min_height;
  rec.steps = tr.accepted_steps;
  rec.max_adiabaticity = tr.max_adiabaticity;
  rec.message = tr.message;
  return rec;
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(SpinPreparation s) {
  switch (s) {
    case SpinPreparation::PlusX: return "plus_x";
    case SpinPreparation::MinusX: return "minus_x";
    case SpinPreparation::PlusY: return "plus_y";
    case SpinPreparation::MinusY: return "minus_y";
    case SpinPreparation::MixedX: return "mixed_x";
  }
  return "unknown";
}

SpinPreparation parse_spin_preparation(const std::string& s) {
  for (auto p : {SpinPreparation::PlusX, SpinPreparation::MinusX, SpinPreparation::PlusY,
                 SpinPreparation::MinusY, SpinPreparation::MixedX}) {
    if (s == to_string(p)) return p;
  }
  throw std::invalid_argument("unknown spin preparation '" + s +
                              "' (plus_x, minus_x, plus_y, minus_y, mixed_x)");
}

Vec3 prepared_spin(SpinPreparation s, std::size_t index) {
  switch (s) {
    case SpinPreparation::PlusX: return Vec3(0.5, 0, 0);
    case SpinPreparation::MinusX: return Vec3(-0.5, 0, 0);
    case SpinPreparation::PlusY: return Vec3(0, 0.5, 0);
    case SpinPreparation::MinusY: return Vec3(0, -0.5, 0);
    case SpinPreparation::MixedX: return Vec3(index % 2 == 0 ? 0.5 : -0.5, 0, 0);
  }
  return Vec3::Zero();
}

double SourceParams::position_spread(const Ion& ion) const {
  if (waist) return *waist;
  const double div = effective_divergence();
  if (!(div > 0.0)) return 0.0;
  const double energy = speed_to_kinetic_energy(mean_speed, ion.mass);
  return beam_waist_from_emittance(emittance_1d, energy, div);
}

void SourceParams::validate(const Ion& ion) const {
  if (!(mean_speed > 0.0)) throw std::invalid_argument("source: mean speed must be positive");
  if (!(axial_spread >= 0.0) || !(divergence >= 0.0)) {
    throw std::invalid_argument("source: spreads must be non-negative");
  }
  if (!(spread_scale >= 0.0)) throw std::invalid_argument("source: spread scale must be >= 0");
  if (waist && !(*waist >= 0.0)) throw std::invalid_argument("source: waist must be >= 0");
  const double floor = minimum_emittance_1d(ion.mass);
  // The single-mode value is quoted rounded (0.13 nm^2 mrad^2 eV), hence the 1% slack.
  if (!(emittance_1d >= 0.99 * floor)) {
    throw std::invalid_argument("source: emittance below the single-mode floor hbar/sqrt(8m) = " +
                                std::to_string(floor) + " m rad sqrt(J)");
  }
}

void LaunchFrame::validate() const {
  if (!(height > 0.0)) throw std::invalid_argument("launch: height must be positive");
  if (!(incidence >= 0.0 && incidence < 0.5 * codata::pi)) {
    throw std::invalid_argument("launch: incidence must lie in [0, pi/2)");
  }
}

void FocusSpec::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("focus: tolerance must be positive");
  if (!(target > 0.0)) throw std::invalid_argument("focus: target must be positive");
}

std::vector<IonState> sample_initial_states(const SourceParams& src, const LaunchFrame& frame,
                                            std::size_t n, std::uint64_t seed, const Ion& ion) {
  if (n == 0) throw std::invalid_argument("sample_initial_states: n must be positive");
  src.validate(ion);
  frame.validate();
  const double sv = src.effective_axial_spread();
  const double sa = src.effective_divergence();
  const double sx = src.position_spread(ion);

  std::vector<IonState> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = ion_stream(seed, i);
    std::normal_distribution<double> unit(0.0, 1.0);
    // Fixed draw order: speed, vertical angle, horizontal angle, y, x.
    const double speed = src.mean_speed + sv * unit(rng);
    const double theta = frame.incidence + sa * unit(rng);
    const double phi = sa * unit(rng);
    const double dy = sx * unit(rng);
    const double dx = sx * unit(rng);

    IonState& s = out[i];
    s.r = Vec3(frame.x + dx, frame.height + dy, frame.z);
    s.v = speed * Vec3(std::sin(phi), -std::sin(theta) * std::cos(phi),
                       std::cos(theta) * std::cos(phi));
    s.S = prepared_spin(src.spin, i);
  }
  return out;
}

std::optional<double> focused_launch_height(double target, double vy, double vz,
                                            const AdiabaticParams& p, const ImageParams& image,
                                            const Ion& ion) {
  if (!(vy < 0.0)) throw std::invalid_argument("focused_launch_height: need v_y < 0");
  // The turning point is the target only if the net push is upward there.
  if (!(averaged_accel_y(target, vz, p, image, ion) > 0.0)) return std::nullopt;

  auto g = [&](double yl) {
    return vertical_energy(target, ReducedLaunch{yl, vy, vz}, p, image, ion);
  };
  double lo = target, hi = target + 10e-6;
  double g_lo = g(lo), g_hi = g(hi);
  while (g_hi > 0.0) {
    lo = hi;
    g_lo = g_hi;
    hi = target + 2.0 * (hi - target);
    if (hi - target > 1.0) return std::nullopt;
    g_hi = g(hi);
  }
  boost::uintmax_t iters = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(50);
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

std::vector<IonState> focus_initial_states(const SourceParams& src, const LaunchFrame& frame,
                                           const FocusSpec& focus, const AdiabaticParams& p,
                                           const ImageParams& image, std::size_t n,
                                           std::uint64_t seed, const Ion& ion) {
  focus.validate();
  p.validate();
  const double bias = p.omega0 * ion.mass / ion.charge;
  const double vz_mean = src.mean_speed * std::cos(frame.incidence);
  if (image.enabled) {
    const double needed = crash_bias_minimum(vz_mean, focus.target, ion.charge);
    if (!(bias >= needed)) {
      throw std::invalid_argument("focus target unreachable: B0 >= crash_bias_minimum(v_z, y*) "
                                  "fails (" + std::to_string(bias) + " T < " +
                                  std::to_string(needed) + " T)");
    }
  }

  std::vector<IonState> states = sample_initial_states(src, frame, n, seed, ion);
  for (auto& s : states) {
    const double jitter = s.r.y() - frame.height;
    const auto yl = focused_launch_height(focus.target, s.v.y(), s.v.z(), p.with_spin(s.S.x()),
                                          image, ion);
    if (!yl) {
      throw std::invalid_argument(
          "focus target unreachable: averaged a_y(y*) > 0 fails (target at or below the "
          "barrier top for S_x0 = " + std::to_string(s.S.x()) + ")");
    }
    s.r.y() = *yl + jitter;
  }
  return states;
}

// ---------------------------------------------------------------------------

const char* to_string(Engine e) { return e == Engine::Full ? "full" : "adiabatic"; }

Engine parse_engine(const std::string& s) {
  if (s == "full") return Engine::Full;
  if (s == "adiabatic") return Engine::Adiabatic;
  throw std::invalid_argument("unknown engine '" + s + "' (full, adiabatic)");
}

int default_worker_count() {
  if (const char* env = std::getenv("SGBEAM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

EnsembleResult run_ensemble(const std::vector<IonState>& states, const EnsembleSetup& setup,
                            std::uint64_t seed) {
  if (states.empty()) throw std::invalid_argument("run_ensemble: no states");
  if (setup.engine == Engine::Full && !setup.field) {
    throw std::invalid_argument("run_ensemble: the full engine needs a field model");
  }
  if (setup.engine == Engine::Adiabatic && !setup.adiabatic) {
    throw std::invalid_argument("run_ensemble: the adiabatic engine needs AdiabaticParams");
  }
  setup.options.validate();

  EnsembleResult result;
  result.seed = seed;
  result.engine = setup.engine;
  result.records.resize(states.size());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < states.size(); i = next++) {
      IonRecord rec;
      try {
        rec = setup.engine == Engine::Full ? run_full(i, states[i], setup)
                                           : run_reduced(i, states[i], setup);
      } catch (const std::exception& e) {
        rec.index = i;
        rec.initial = states[i];
        rec.final = states[i];
        rec.status = TrajectoryStatus::StepFailure;
        rec.message = e.what();
      }
      rec.angle = split_angle(rec.final.v, setup.plane);
      result.records[i] = std::move(rec);
    }
  };

  const int workers = std::max(1, std::min<int>(setup.workers > 0 ? setup.workers
                                                                  : default_worker_count(),
                                                static_cast<int>(states.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  summarise(result);
  return result;
}

void summarise(EnsembleResult& result) {
  std::map<std::string, SpinSummary> groups;
  std::map<std::string, Moments> angle, vy, vz, closest;
  result.crashed = 0;
  for (const auto& rec : result.records) {
    const std::string label = spin_label(rec.initial.S);
    SpinSummary& g = groups[label];
    g.label = label;
    ++g.count;
    if (rec.status == TrajectoryStatus::Crashed) {
      ++g.crashed;
      ++result.crashed;
      continue;
    }
    if (!survived(rec.status)) {
      ++g.failed;
      continue;
    }
    angle[label].add(rec.angle);
    vy[label].add(rec.final.v.y());
    vz[label].add(rec.final.v.z());
    closest[label].add(rec.closest_approach);
  }
  result.spins.clear();
  for (auto& [label, g] : groups) {
    g.mean_angle = angle[label].mean;
    g.angle_spread = angle[label].sd();
    g.mean_vy = vy[label].mean;
    g.spread_vy = vy[label].sd();
    g.mean_vz = vz[label].mean;
    g.spread_vz = vz[label].sd();
    g.mean_closest = closest[label].mean;
    g.spread_closest = closest[label].sd();
    result.spins.push_back(g);
  }
  result.resolution_ratio = resolution_ratio(result.spins);
}

double resolution_ratio(const std::vector<SpinSummary>& spins) {
  for (const char axis : {'x', 'y'}) {
    const SpinSummary* plus = nullptr;
    const SpinSummary* minus = nullptr;
    for (const auto& s : spins) {
      if (s.label == std::string("+") + axis) plus = &s;
      if (s.label == std::string("-") + axis) minus = &s;
    }
    if (!plus || !minus) continue;
    if (plus->count == plus->crashed + plus->failed ||
        minus->count == minus->crashed + minus->failed) {
      return 0.0;
    }
    const double spread = 0.5 * (plus->angle_spread + minus->angle_spread);
    const double sep = std::abs(plus->mean_angle - minus->mean_angle);
    if (spread == 0.0) return sep > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return sep / spread;
  }
  return 0.0;
}

std::vector<VelocityHistogram> velocity_histograms(const EnsembleResult& result, int bins_vz,
                                                   int bins_vy) {
  if (bins_vz < 1 || bins_vy < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  double z0 = std::numeric_limits<double>::infinity(), z1 = -z0, y0 = z0, y1 = -z0;
  for (const auto& r : result.records) {
    if (!survived(r.status)) continue;
    z0 = std::min(z0, r.final.v.z());
    z1 = std::max(z1, r.final.v.z());
    y0 = std::min(y0, r.final.v.y());
    y1 = std::max(y1, r.final.v.y());
  }
  std::vector<VelocityHistogram> out;
  if (!(z1 >= z0)) return out;
  // Degenerate ranges get a unit-width window so every ion lands in a bin.
  if (z1 == z0) z0 -= 0.5, z1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;

  std::map<std::string, VelocityHistogram> by_label;
  for (const auto& r : result.records) {
    if (!survived(r.status)) continue;
    const std::string label = spin_label(r.initial.S);
    auto& h = by_label[label];
    if (h.counts.empty()) {
      h = VelocityHistogram{label, z0, z1, y0, y1, bins_vz, bins_vy, {}};
      h.counts.assign(static_cast<std::size_t>(bins_vz) * bins_vy, 0);
    }
    const int iz = std::min(bins_vz - 1, static_cast<int>((r.final.v.z() - z0) / (z1 - z0) * bins_vz));
    const int iy = std::min(bins_vy - 1, static_cast<int>((r.final.v.y() - y0) / (y1 - y0) * bins_vy));
    ++h.counts[static_cast<std::size_t>(iz) * bins_vy + iy];
  }
  for (auto& [_, h] : by_label) out.push_back(std::move(h));
  return out;
}

std::vector<ApproachPoint> closest_approach_curve(const SourceParams& src,
                                                  const LaunchFrame& frame,
                                                  const AdiabaticParams& p,
                                                  const ImageParams& image, double vy_min,
                                                  double vy_max, int n, double floor,
                                                  const Ion& ion) {
  frame.validate();
  if (n < 2) throw std::invalid_argument("closest_approach_curve: need n >= 2");
  if (!(vy_min > 0.0) || !(vy_max > vy_min) || !(vy_max < src.mean_speed)) {
    throw std::invalid_argument("closest_approach_curve: need 0 < vy_min < vy_max < v");
  }
  std::vector<ApproachPoint> out;
  for (double spin : {0.5, -0.5}) {
    bool truncated = false;
    for (int i = 0; i < n; ++i) {
      ApproachPoint pt;
      pt.vy0 = vy_min + (vy_max - vy_min) * i / (n - 1);
      pt.spin = spin;
      pt.closest = kNaN;
      if (!truncated) {
        const double vz = std::sqrt(src.mean_speed * src.mean_speed - pt.vy0 * pt.vy0);
        AdiabaticParams ps = p.with_spin(spin);
        ps.vz0 = vz;
        const auto tp =
            turning_point(ReducedLaunch{frame.height, -pt.vy0, vz}, ps, image, floor, ion);
        if (tp) {
          pt.closest = *tp;
        } else {
          truncated = true;
        }
      }
      pt.crashed = truncated;
      out.push_back(pt);
    }
  }
  return out;
}

}  // namespace sgbeam
