#include "sgbeam/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "sgbeam/ode.hpp"

namespace sgbeam {

namespace {

constexpr double kPi = codata::pi;

double image_strength_per_mass(const Ion& ion) {
  return ion.charge * ion.charge / (16.0 * kPi * codata::vacuum_permittivity * ion.mass);
}

double omega_tilde(double decay, double doppler, const AdiabaticParams& p) {
  const double w1 = p.Omega1 * decay;
  return std::sqrt(doppler * doppler + w1 * w1);
}

double spin_projection(double doppler, const AdiabaticParams& p) {
  return doppler >= 0.0 ? p.Sx0 : -p.Sx0;
}

void require_positive_height(double y, const char* where) {
  if (!(y > 0.0)) {
    throw DomainError(std::string(where) + ": height must be positive, got " + std::to_string(y));
  }
}

// Highest root of g on (floor, top] scanning down from top, where g(top) > 0.
template <class G>
std::optional<double> highest_root_below(G&& g, double top, double floor) {
  constexpr int kScan = 4000;
  const double span = top - floor;
  if (!(span > 0.0)) return std::nullopt;
  double hi = top;
  double g_hi = g(hi);
  if (g_hi <= 0.0) return g_hi == 0.0 ? std::optional<double>(top) : std::nullopt;
  for (int i = 1; i <= kScan; ++i) {
    // Denser sampling close to the floor where the image term varies fastest.
    const double frac = static_cast<double>(i) / kScan;
    const double lo = floor + span * (1.0 - frac) * (1.0 - frac);
    const double g_lo = g(lo);
    if (g_lo <= 0.0) {
      if (g_lo == 0.0) return lo;
      boost::uintmax_t iters = 200;
      const auto tol = boost::math::tools::eps_tolerance<double>(48);
      const auto bracket = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, tol, iters);
      return 0.5 * (bracket.first + bracket.second);
    }
    hi = lo;
    g_hi = g_lo;
  }
  return std::nullopt;
}

}  // namespace

AdiabaticParams AdiabaticParams::from_fields(double B0, double B1, double kappa, double vz0,
                                             double Sx0, const Ion& ion) {
  AdiabaticParams p;
  p.Omega0 = ion.gyromagnetic_ratio() * B0;
  p.Omega1 = ion.gyromagnetic_ratio() * B1;
  p.omega0 = ion.charge * B0 / ion.mass;
  p.omega1 = ion.charge * B1 / ion.mass;
  p.kappa = kappa;
  p.vz0 = vz0;
  p.u = ion.moment() * kappa / ion.charge;
  p.Sx0 = Sx0;
  p.validate();
  return p;
}

AdiabaticParams AdiabaticParams::from_grating(double B0, const GratingParams& grating,
                                              double vz0, double Sx0, const Ion& ion) {
  grating.validate();
  return from_fields(B0, grating_harmonic_amplitude(grating, 1), grating.kappa(), vz0, Sx0, ion);
}

void AdiabaticParams::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("AdiabaticParams: kappa must be positive");
  if (!dynamic_doppler && doppler_shifted_larmor() == 0.0 && Omega1 == 0.0) {
    throw std::invalid_argument("AdiabaticParams: effective precession frequency vanishes");
  }
}

EffectivePrecession effective_precession(double y, const AdiabaticParams& p,
                                         std::optional<double> vz) {
  const double doppler = p.doppler_shifted_larmor(vz && p.dynamic_doppler ? *vz : p.vz0);
  const double w1 = p.Omega1 * std::exp(-p.kappa * y);
  EffectivePrecession out;
  out.Omega_tilde = std::sqrt(doppler * doppler + w1 * w1);
  if (out.Omega_tilde > 0.0) out.axis = Vec3(doppler, 0.0, w1) / out.Omega_tilde;
  return out;
}

Vec3 adiabatic_spin(double y, const AdiabaticParams& p, std::optional<double> vz) {
  const double doppler = p.doppler_shifted_larmor(vz && p.dynamic_doppler ? *vz : p.vz0);
  const EffectivePrecession ep = effective_precession(y, p, vz);
  return ep.axis * spin_projection(doppler, p);
}

double transverse_wiggle_amplitude(double y, const AdiabaticParams& p) {
  return p.omega1 * std::exp(-p.kappa * y) / p.kappa;
}

AccelTerms averaged_accel_terms(double y, double vz, const AdiabaticParams& p,
                                const ImageParams& image, const Ion& ion) {
  require_positive_height(y, "averaged_accel_y");
  const double decay = std::exp(-p.kappa * y);
  const double doppler = p.doppler_shifted_larmor(p.dynamic_doppler ? vz : p.vz0);
  const double w1 = p.omega1 * decay;  // omega1(y)
  const double W1 = p.Omega1 * decay;  // Omega1(y)

  AccelTerms a;
  a.lorentz = p.omega0 * vz;
  if (image.enabled) {
    const double h = y - image.surface_height;
    require_positive_height(h, "averaged_accel_y (image)");
    a.image = -image_strength_per_mass(ion) / (h * h);
  }
  a.ponderomotive = w1 * w1 / (2.0 * p.kappa);
  a.stern_gerlach = p.u * w1 * (W1 / omega_tilde(decay, doppler, p)) * spin_projection(doppler, p);
  return a;
}

double averaged_accel_y(double y, double vz, const AdiabaticParams& p, const ImageParams& image,
                        const Ion& ion) {
  return averaged_accel_terms(y, vz, p, image, ion).total();
}

double adiabaticity_parameter(double y, double vy, const AdiabaticParams& p,
                              std::optional<double> vz) {
  const double doppler = p.doppler_shifted_larmor(vz && p.dynamic_doppler ? *vz : p.vz0);
  const double decay = std::exp(-p.kappa * y);
  const double W1 = p.Omega1 * decay;
  const double Wt = omega_tilde(decay, doppler, p);
  return p.kappa * std::abs(doppler) * W1 * std::abs(vy) / (Wt * Wt * Wt);
}

double vertical_energy(double y, const ReducedLaunch& launch, const AdiabaticParams& p,
                       const ImageParams& image, const Ion& ion) {
  if (p.dynamic_doppler) {
    throw std::invalid_argument("vertical_energy: closed form needs the frozen Doppler shift");
  }
  require_positive_height(y, "vertical_energy");
  const double yL = launch.y;
  const double dy = y - yL;
  const double k = p.kappa;
  const double doppler = p.doppler_shifted_larmor();

  double w = 0.5 * launch.vy * launch.vy;
  // Lorentz term with v_z(y) = v_zL - omega0 (y - y_L).
  w += p.omega0 * (launch.vz * dy - 0.5 * p.omega0 * dy * dy);
  if (image.enabled) {
    const double h = y - image.surface_height, hL = yL - image.surface_height;
    require_positive_height(h, "vertical_energy (image)");
    w += image_strength_per_mass(ion) * (1.0 / h - 1.0 / hL);
  }
  const double e2 = std::exp(-2.0 * k * y), e2L = std::exp(-2.0 * k * yL);
  w -= p.omega1 * p.omega1 / (4.0 * k * k) * (e2 - e2L);
  if (p.Omega1 != 0.0) {
    const double Wt = omega_tilde(std::exp(-k * y), doppler, p);
    const double WtL = omega_tilde(std::exp(-k * yL), doppler, p);
    w -= p.u * p.omega1 * spin_projection(doppler, p) / (k * p.Omega1) * (Wt - WtL);
  }
  return w;
}

std::optional<double> turning_point(const ReducedLaunch& launch, const AdiabaticParams& p,
                                    const ImageParams& image, double floor, const Ion& ion) {
  if (launch.vy >= 0.0) return launch.y;
  const double lowest = image.enabled ? std::max(floor, image.surface_height) : floor;
  const double bottom = std::max(lowest, 0.0);
  // Keep the scan strictly inside the domain.
  const double eps = 1e-12;
  auto g = [&](double y) { return vertical_energy(y, launch, p, image, ion); };
  return highest_root_below(g, launch.y, bottom + eps);
}

std::optional<double> static_balance_height(double vz, const AdiabaticParams& p,
                                            const ImageParams& image, double y_start,
                                            double floor, const Ion& ion) {
  const double lowest = image.enabled ? std::max(floor, image.surface_height) : floor;
  auto g = [&](double y) { return averaged_accel_y(y, vz, p, image, ion); };
  return highest_root_below(g, y_start, std::max(lowest, 0.0) + 1e-12);
}

double crash_bias_minimum(double vz, double y, double charge) {
  if (!(vz > 0.0) || !(y > 0.0)) {
    throw std::domain_error("crash_bias_minimum: v_z and y must be positive");
  }
  return charge / (16.0 * kPi * codata::vacuum_permittivity * y * y * vz);
}

IntegratorOptions adiabatic_default_options() {
  IntegratorOptions o;
  o.rel_tol = 1e-10;
  o.abs_tol = 1e-10;
  o.max_step = 50e-9;
  o.record_stride = 10;
  return o;
}

AdiabaticTrajectory integrate_adiabatic(const ReducedLaunch& launch, const AdiabaticParams& p,
                                        const ImageParams& image, const IntegratorOptions& opts,
                                        const Ion& ion) {
  opts.validate();
  p.validate();
  using State = ode::Vector<4>;  // y, v_y, v_z, z

  AdiabaticTrajectory traj;
  traj.min_height = launch.y;

  auto sample_at = [&](double t, const State& s) {
    AdiabaticSample out;
    out.t = t;
    out.y = s[0];
    out.vy = s[1];
    out.vz = s[2];
    out.z = s[3];
    out.terms = averaged_accel_terms(s[0], s[2], p, image, ion);
    return out;
  };

  State y0(launch.y, launch.vy, launch.vz, 0.0);
  try {
    traj.samples.push_back(sample_at(0.0, y0));
  } catch (const DomainError& e) {
    AdiabaticSample bad;
    bad.y = launch.y;
    bad.vy = launch.vy;
    bad.vz = launch.vz;
    traj.samples.push_back(bad);
    traj.status = TrajectoryStatus::Crashed;
    traj.message = e.what();
    return traj;
  }
  if (opts.y_min && launch.y < *opts.y_min) {
    traj.status = TrajectoryStatus::Crashed;
    traj.message = "launched below the crash height";
    return traj;
  }

  auto f = [&](double, const State& s) -> State {
    State d;
    d[0] = s[1];
    d[1] = averaged_accel_y(s[0], s[2], p, image, ion);
    d[2] = -p.omega0 * s[1];
    d[3] = s[2];
    return d;
  };
  auto event = [&](double, const State& s) -> double {
    return opts.z_exit ? s[3] - *opts.z_exit : -1.0;
  };

  bool crashed = false;
  long since_record = 0;
  auto on_accept = [&](double t, State& s) -> ode::HookAction {
    traj.min_height = std::min(traj.min_height, s[0]);
    const double ad = adiabaticity_parameter(s[0], s[1], p, s[2]);
    traj.max_adiabaticity = std::max(traj.max_adiabaticity, ad);
    if (opts.y_min && s[0] < *opts.y_min) {
      crashed = true;
      try {
        traj.samples.push_back(sample_at(t, s));
      } catch (const DomainError&) {
      }
      return ode::HookAction::Stop;
    }
    if (++since_record >= opts.record_stride) {
      since_record = 0;
      traj.samples.push_back(sample_at(t, s));
    }
    return ode::HookAction::Continue;
  };

  ode::DriveOptions dopt;
  dopt.rel_tol = opts.rel_tol;
  dopt.abs_tol = opts.abs_tol;
  dopt.max_step = opts.max_step;
  dopt.min_step = opts.min_step;
  dopt.t_max = opts.t_max;
  dopt.event_tol = 1e-12;
  dopt.max_steps = opts.max_steps;

  State units(1e-6, 1.0, 1.0, 1e-6);
  const auto res = ode::drive<4>(f, 0.0, y0, units, dopt, event, on_accept);
  traj.accepted_steps = res.accepted;
  traj.message = res.message;
  traj.adiabaticity_violated = traj.max_adiabaticity > kAdiabaticityLimit;

  if (traj.samples.back().t != res.t) {
    try {
      traj.samples.push_back(sample_at(res.t, res.y));
    } catch (const DomainError&) {
      AdiabaticSample last;
      last.t = res.t;
      last.y = res.y[0];
      last.vy = res.y[1];
      last.vz = res.y[2];
      last.z = res.y[3];
      traj.samples.push_back(last);
    }
  }

  switch (res.status) {
    case ode::DriveStatus::TimeLimit:
      traj.status = TrajectoryStatus::CompletedWindow;
      break;
    case ode::DriveStatus::Event:
      traj.status = TrajectoryStatus::ExitedRegion;
      break;
    case ode::DriveStatus::Stopped:
      traj.status = crashed ? TrajectoryStatus::Crashed : TrajectoryStatus::StepFailure;
      break;
    case ode::DriveStatus::DomainFailure:
      traj.status = TrajectoryStatus::Crashed;
      break;
    case ode::DriveStatus::StepUnderflow: {
      const double h = res.y[0] - (image.enabled ? image.surface_height : 0.0);
      traj.status = (res.y[1] < 0.0 && h < 1e-6) ? TrajectoryStatus::Crashed
                                                  : TrajectoryStatus::StepFailure;
      break;
    }
    case ode::DriveStatus::StepLimit:
      traj.status = TrajectoryStatus::StepFailure;
      break;
  }
  return traj;
}

}  // namespace sgbeam
