#pragma once

// Adaptive Dormand-Prince 5(4) integration with event location.
//
// The driver is a template over the state dimension so the full 9-component
// spin/centre-of-mass system and the reduced 4-component adiabatic system
// share the same stepping, error control and termination logic.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "sgbeam/types.hpp"

namespace sgbeam::ode {

template <int N>
using Vector = Eigen::Matrix<double, N, 1>;

struct DriveOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double max_step = 1e-9;
  double min_step = 1e-20;
  double initial_step = 0.0;  // 0: pick from max_step
  double t_max = std::numeric_limits<double>::infinity();
  double event_tol = 1e-12;   // |g| at which a located event is accepted
  long max_steps = 200'000'000;
};

enum class DriveStatus {
  TimeLimit,      // reached t_max
  Event,          // event function crossed zero from below
  Stopped,        // the accept hook asked to stop
  StepUnderflow,  // error control drove h below min_step
  DomainFailure,  // the rhs kept failing with DomainError down to min_step
  StepLimit,      // max_steps exhausted
};

template <int N>
struct DriveResult {
  double t = 0.0;
  Vector<N> y;
  DriveStatus status = DriveStatus::TimeLimit;
  long accepted = 0;
  long rejected = 0;
  std::string message;
};

enum class HookAction { Continue, Stop };

template <int N>
struct StepResult {
  Vector<N> y;    // fifth-order solution
  Vector<N> err;  // difference to the embedded fourth-order solution
  Vector<N> k7;   // f(t + h, y), reusable as the next k1
};

/// One Dormand-Prince step of size h from (t, y) given k1 = f(t, y).
template <int N, class F>
StepResult<N> dormand_prince_step(F&& f, double t, const Vector<N>& y, const Vector<N>& k1,
                                  double h) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // b - b*, the embedded fourth-order weights subtracted from the fifth-order ones.
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const Vector<N> k2 = f(t + c2 * h, Vector<N>(y + h * a21 * k1));
  const Vector<N> k3 = f(t + c3 * h, Vector<N>(y + h * (a31 * k1 + a32 * k2)));
  const Vector<N> k4 = f(t + c4 * h, Vector<N>(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
  const Vector<N> k5 =
      f(t + c5 * h, Vector<N>(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
  const Vector<N> k6 = f(t + h, Vector<N>(y + h * (a61 * k1 + a62 * k2 + a63 * k3 +
                                                   a64 * k4 + a65 * k5)));
  StepResult<N> out;
  out.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  out.k7 = f(t + h, out.y);
  out.err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * out.k7);
  return out;
}

/// Max-norm of the error relative to the mixed tolerance. `units` rescales
/// each component before the tolerances apply (e.g. metres to micrometres).
template <int N>
double error_norm(const Vector<N>& err, const Vector<N>& y0, const Vector<N>& y1,
                  const Vector<N>& units, double rel_tol, double abs_tol) {
  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const double scale =
        abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i])) / units[i];
    worst = std::max(worst, std::abs(err[i]) / units[i] / scale);
  }
  return worst;
}

/// Adaptive forward integration.
///
///   f(t, y) -> dy/dt; may throw DomainError, which rejects the step and
///     shrinks it.
///   event(t, y) -> g; integration stops where g crosses zero from below,
///     located to |g| <= event_tol by re-stepping with secant-adjusted h.
///   on_accept(t, y) -> HookAction; called after every accepted step, may
///     modify y in place (e.g. renormalisation) and may request a stop.
template <int N, class F, class Event, class Hook>
DriveResult<N> drive(F&& f, double t0, const Vector<N>& y0, const Vector<N>& units,
                     const DriveOptions& opt, Event&& event, Hook&& on_accept) {
  DriveResult<N> res;
  res.t = t0;
  res.y = y0;

  double t = t0;
  Vector<N> y = y0;
  Vector<N> k1;
  try {
    k1 = f(t, y);
  } catch (const DomainError& e) {
    res.status = DriveStatus::DomainFailure;
    res.message = e.what();
    return res;
  }
  double g = event(t, y);
  double h = opt.initial_step > 0.0 ? opt.initial_step : 0.1 * opt.max_step;
  bool last_failure_domain = false;
  std::string last_domain_message;

  auto finish = [&](DriveStatus s) {
    res.t = t;
    res.y = y;
    res.status = s;
    return res;
  };

  while (true) {
    if (t >= opt.t_max) return finish(DriveStatus::TimeLimit);
    if (res.accepted >= opt.max_steps) return finish(DriveStatus::StepLimit);

    h = std::min({h, opt.max_step, opt.t_max - t});
    const double h_floor =
        std::max(opt.min_step, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(t));
    if (h < h_floor) {
      if (last_failure_domain) {
        res.message = last_domain_message;
        return finish(DriveStatus::DomainFailure);
      }
      // The final sliver before t_max may legitimately be tiny.
      if (opt.t_max - t < h_floor) return finish(DriveStatus::TimeLimit);
      res.message = "step size underflow at t = " + std::to_string(t);
      return finish(DriveStatus::StepUnderflow);
    }

    StepResult<N> step;
    try {
      step = dormand_prince_step<N>(f, t, y, k1, h);
    } catch (const DomainError& e) {
      last_failure_domain = true;
      last_domain_message = e.what();
      ++res.rejected;
      h *= 0.25;
      continue;
    }

    const double err = error_norm<N>(step.err, y, step.y, units, opt.rel_tol, opt.abs_tol);
    if (!std::isfinite(err) || err > 1.0) {
      last_failure_domain = false;
      ++res.rejected;
      const double factor = std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.1;
      h *= std::clamp(factor, 0.1, 0.9);
      continue;
    }
    last_failure_domain = false;

    double t_new = t + h;
    double g_new = event(t_new, step.y);
    if (g < 0.0 && g_new >= 0.0) {
      // Secant refinement on the step length; each trial is a fresh step
      // from the accepted state (t, y).
      double h_lo = 0.0, g_lo = g, h_hi = h, g_hi = g_new;
      StepResult<N> trial = step;
      double h_trial = h;
      for (int it = 0; it < 60 && std::abs(g_hi) > opt.event_tol; ++it) {
        double h_next = h_lo - g_lo * (h_hi - h_lo) / (g_hi - g_lo);
        if (!(h_next > h_lo && h_next < h_hi)) h_next = 0.5 * (h_lo + h_hi);
        try {
          trial = dormand_prince_step<N>(f, t, y, k1, h_next);
        } catch (const DomainError&) {
          break;  // keep the bracketing step
        }
        const double g_trial = event(t + h_next, trial.y);
        if (g_trial >= 0.0) {
          h_hi = h_next;
          g_hi = g_trial;
          h_trial = h_next;
          step = trial;
        } else {
          h_lo = h_next;
          g_lo = g_trial;
        }
      }
      t = t + h_trial;
      y = step.y;
      ++res.accepted;
      on_accept(t, y);
      return finish(DriveStatus::Event);
    }

    t = t_new;
    y = step.y;
    g = g_new;
    ++res.accepted;
    const Vector<N> before = y;
    const HookAction action = on_accept(t, y);
    if (action == HookAction::Stop) return finish(DriveStatus::Stopped);
    if (y == before) {
      k1 = step.k7;
    } else {
      try {
        k1 = f(t, y);
      } catch (const DomainError& e) {
        res.message = e.what();
        return finish(DriveStatus::DomainFailure);
      }
    }

    const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
  }
}

}  // namespace sgbeam::ode
