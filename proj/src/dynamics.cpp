#include "sgbeam/dynamics.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "sgbeam/ode.hpp"

namespace sgbeam {

namespace {

using State = ode::Vector<9>;

State pack(const IonState& s) {
  State y;
  y << s.r, s.v, s.S;
  return y;
}

IonState unpack(double t, const State& y) {
  IonState s;
  s.t = t;
  s.r = y.segment<3>(0);
  s.v = y.segment<3>(3);
  s.S = y.segment<3>(6);
  return s;
}

// Below this height above the image plane a collapsing step counts as contact.
constexpr double kSurfaceContact = 1e-6;

// Tolerances act on positions in micrometres, velocities in m/s and the
// dimensionless spin.
State error_units() {
  State u;
  u << 1e-6, 1e-6, 1e-6, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0;
  return u;
}

}  // namespace

void IntegratorOptions::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw std::invalid_argument("IntegratorOptions: tolerances must be positive");
  }
  if (!(max_step > 0.0) || !(min_step > 0.0) || min_step >= max_step) {
    throw std::invalid_argument("IntegratorOptions: need 0 < min_step < max_step");
  }
  if (!(t_max > 0.0)) throw std::invalid_argument("IntegratorOptions: t_max must be positive");
  if (record_stride < 1) {
    throw std::invalid_argument("IntegratorOptions: record_stride must be >= 1");
  }
}

const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::CompletedWindow: return "CompletedWindow";
    case TrajectoryStatus::ExitedRegion: return "ExitedRegion";
    case TrajectoryStatus::Crashed: return "Crashed";
    case TrajectoryStatus::StepFailure: return "StepFailure";
  }
  return "unknown";
}

FieldSample ScaledField::sample(const Vec3& r) const {
  FieldSample s = inner_->sample(r);
  s.B *= factor_;
  s.J *= factor_;
  return s;
}

Derivative rhs(const IonState& state, const FieldModel& field, const ImageParams& image,
               const Ion& ion) {
  const FieldSample fs = field.sample(state.r);
  Derivative d;
  d.dr = state.v;
  d.dv = total_acceleration(state, fs, image, ion);
  d.dS = -ion.gyromagnetic_ratio() * state.S.cross(fs.B);
  return d;
}

double conserved_energy(const IonState& state, const FieldModel& field,
                        const ImageParams& image, const Ion& ion) {
  double H = 0.5 * ion.mass * state.v.squaredNorm() +
             ion.moment() * state.S.dot(field.sample(state.r).B);
  if (image.enabled) H += image_potential(state.r.y(), image, ion.charge);
  return H;
}

Trajectory integrate(const IonState& initial, const FieldModel& field, const ImageParams& image,
                     const IntegratorOptions& opts, const Ion& ion) {
  opts.validate();

  Trajectory traj;
  auto& diag = traj.diagnostics;
  traj.samples.push_back(initial);
  diag.min_height = initial.r.y();

  const double spin_norm0 = initial.S.norm();
  try {
    diag.initial_energy = conserved_energy(initial, field, image, ion);
  } catch (const DomainError& e) {
    traj.status = TrajectoryStatus::Crashed;
    diag.message = e.what();
    diag.final_energy = diag.initial_energy;
    return traj;
  }
  diag.final_energy = diag.initial_energy;
  const double energy_scale = std::abs(diag.initial_energy) > 0.0
                                  ? std::abs(diag.initial_energy)
                                  : 1.0;

  if (opts.y_min && initial.r.y() < *opts.y_min) {
    traj.status = TrajectoryStatus::Crashed;
    diag.message = "launched below the crash height";
    return traj;
  }

  auto f = [&](double t, const State& y) -> State {
    const Derivative d = rhs(unpack(t, y), field, image, ion);
    State out;
    out << d.dr, d.dv, d.dS;
    return out;
  };

  auto event = [&](double, const State& y) -> double {
    return opts.z_exit ? y[2] - *opts.z_exit : -1.0;
  };

  bool crashed = false;
  long since_record = 0;
  const double x0 = initial.r.x();
  auto on_accept = [&](double t, State& y) -> ode::HookAction {
    const double height = y[1];
    diag.min_height = std::min(diag.min_height, height);
    diag.max_x_excursion = std::max(diag.max_x_excursion, std::abs(y[0] - x0));

    Vec3 S = y.segment<3>(6);
    if (spin_norm0 > 0.0) {
      const double norm = S.norm();
      diag.max_spin_norm_drift = std::max(diag.max_spin_norm_drift, std::abs(norm - spin_norm0));
      if (opts.renormalise_spin && norm > 0.0) y.segment<3>(6) = S * (spin_norm0 / norm);
    }

    const IonState st = unpack(t, y);
    try {
      const double H = conserved_energy(st, field, image, ion);
      diag.final_energy = H;
      diag.energy_drift =
          std::max(diag.energy_drift, std::abs(H - diag.initial_energy) / energy_scale);
    } catch (const DomainError&) {
      // Below the image surface: handled as a crash just below.
    }

    if (opts.y_min && height < *opts.y_min) {
      crashed = true;
      traj.samples.push_back(st);
      return ode::HookAction::Stop;
    }
    if (++since_record >= opts.record_stride) {
      since_record = 0;
      traj.samples.push_back(st);
    }
    return ode::HookAction::Continue;
  };

  ode::DriveOptions dopt;
  dopt.rel_tol = opts.rel_tol;
  dopt.abs_tol = opts.abs_tol;
  dopt.max_step = opts.max_step;
  dopt.min_step = opts.min_step;
  dopt.t_max = initial.t + opts.t_max;
  dopt.event_tol = 1e-12;
  dopt.max_steps = opts.max_steps;

  const auto res = ode::drive<9>(f, initial.t, pack(initial), error_units(), dopt, event,
                                 on_accept);
  diag.accepted_steps = res.accepted;
  diag.rejected_steps = res.rejected;
  diag.message = res.message;

  const IonState last = unpack(res.t, res.y);
  if (traj.samples.back().t != last.t) traj.samples.push_back(last);

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
      // The 1/h^2 image force makes the step collapse just above the plane.
      const double h = last.r.y() - image.surface_height;
      const bool falling_in = image.enabled && last.v.y() < 0.0 && h < kSurfaceContact;
      traj.status = falling_in ? TrajectoryStatus::Crashed : TrajectoryStatus::StepFailure;
      if (falling_in) diag.message = "step collapse while falling onto the image plane";
      break;
    }
    case ode::DriveStatus::StepLimit:
      traj.status = TrajectoryStatus::StepFailure;
      break;
  }
  return traj;
}

std::vector<Trajectory> run_multipole_scenario(const std::vector<Vec3>& spins,
                                               const IonState& launch,
                                               const MultipoleParams& params,
                                               double window_length, IntegratorOptions opts,
                                               const Ion& ion) {
  if (!(launch.v.norm() > 0.0)) {
    throw std::invalid_argument("run_multipole_scenario: launch speed must be positive");
  }
  if (!(window_length > 0.0)) {
    throw std::invalid_argument("run_multipole_scenario: window length must be positive");
  }
  auto field = std::make_shared<WindowedField>(std::make_shared<MultipoleField>(params), 0.0,
                                               window_length);
  opts.z_exit = window_length;
  std::vector<Trajectory> out;
  out.reserve(spins.size());
  for (const Vec3& S : spins) {
    IonState s = launch;
    s.S = S;
    out.push_back(integrate(s, *field, ImageParams{}, opts, ion));
  }
  return out;
}

}  // namespace sgbeam
