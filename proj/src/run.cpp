#include "sgbeam/run.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sgbeam {

double vertical_angle(const Vec3& v) { return std::atan2(v.y(), v.z()); }
double horizontal_angle(const Vec3& v) { return std::atan2(v.x(), v.z()); }

namespace {

SpinRun run_full_spin(const RunConfig& c, const FieldModel& field, SpinPreparation spin) {
  SpinRun run;
  run.spin = spin;
  run.initial = c.launch_state(spin);
  Trajectory tr = integrate(run.initial, field, c.image, c.integrator_options());
  run.final = tr.final();
  run.status = tr.status;
  run.closest_approach = tr.diagnostics.min_height;
  run.max_x_excursion = tr.diagnostics.max_x_excursion;
  run.full = std::move(tr);
  return run;
}

SpinRun run_reduced_spin(const RunConfig& c, SpinPreparation spin) {
  SpinRun run;
  run.spin = spin;
  run.initial = c.launch_state(spin);
  const IonState& s = run.initial;
  AdiabaticParams pv = c.adiabatic_params(s.S.x());
  pv.vz0 = s.v.z();
  IntegratorOptions opts = c.integrator_options();
  opts.z_exit = *opts.z_exit - s.r.z();
  AdiabaticTrajectory tr =
      integrate_adiabatic(ReducedLaunch{s.r.y(), s.v.y(), s.v.z()}, pv, c.image, opts);
  const AdiabaticSample& last = tr.final();
  run.final.t = s.t + last.t;
  run.final.r = Vec3(s.r.x() + s.v.x() * last.t, last.y, s.r.z() + last.z);
  run.final.v = Vec3(s.v.x(), last.vy, last.vz);
  run.final.S = s.S;
  run.status = tr.status;
  run.closest_approach = tr.min_height;
  run.adiabatic = std::move(tr);
  return run;
}

double parse_bound(const std::string& text) { return parse_quantity(text, Dimension::Length); }

}  // namespace

SimulationResult simulate(const RunConfig& c) {
  SimulationResult out;
  out.engine = c.engine;
  if (c.engine == Engine::Full) {
    const FieldModelPtr field = c.field_model();
    for (SpinPreparation s : c.launch.spins) out.runs.push_back(run_full_spin(c, *field, s));
  } else {
    for (SpinPreparation s : c.launch.spins) out.runs.push_back(run_reduced_spin(c, s));
  }
  return out;
}

EnsembleResult run_config_ensemble(const RunConfig& c, int workers) {
  if (!c.source) throw std::invalid_argument("ensemble: the config has no [source] block");
  SourceParams src = *c.source;
  src.mean_speed = c.launch.speed;
  const LaunchFrame frame = c.launch_frame();

  EnsembleSetup setup;
  setup.engine = c.engine;
  setup.image = c.image;
  setup.options = c.integrator_options();
  setup.plane = c.ensemble.plane;
  setup.workers = workers > 0 ? workers : c.ensemble.workers;
  if (c.engine == Engine::Full) setup.field = c.field_model();
  if (c.scenario == Scenario::Grating) setup.adiabatic = c.adiabatic_params();

  std::vector<IonState> states;
  if (c.focus.enabled) {
    states = focus_initial_states(src, frame, c.focus, *setup.adiabatic, c.image,
                                  c.ensemble.count, c.seed);
  } else {
    states = sample_initial_states(src, frame, c.ensemble.count, c.seed);
  }
  return run_ensemble(states, setup, c.seed);
}

std::vector<ApproachPoint> run_config_sweep(const RunConfig& c) {
  if (!c.sweep) throw std::invalid_argument("sweep: the config has no [sweep] block");
  if (c.scenario != Scenario::Grating) {
    throw std::invalid_argument("sweep: the closest-approach curve needs the grating scenario");
  }
  SourceParams src;
  if (c.source) src = *c.source;
  src.mean_speed = c.launch.speed;
  return closest_approach_curve(src, c.launch_frame(), c.adiabatic_params(), c.image,
                                c.sweep->vy_min, c.sweep->vy_max, c.sweep->points,
                                c.sweep->floor);
}

std::size_t GridSpec::size() const {
  return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
         static_cast<std::size_t>(n[2]);
}

Vec3 GridSpec::point(std::size_t index) const {
  Vec3 r;
  for (int a = 0; a < 3; ++a) {
    const std::size_t k = index % static_cast<std::size_t>(n[a]);
    index /= static_cast<std::size_t>(n[a]);
    r[a] = n[a] == 1 ? lo[a] : lo[a] + (hi[a] - lo[a]) * static_cast<double>(k) / (n[a] - 1);
  }
  return r;
}

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  std::stringstream ss(text);
  std::string item;
  bool seen[3] = {false, false, false};
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq != 1 || std::string("xyz").find(item[0]) == std::string::npos) {
      throw std::invalid_argument("grid: expected x=..., y=... or z=..., got '" + item + "'");
    }
    const int a = item[0] - 'x';
    if (seen[a]) throw std::invalid_argument(std::string("grid: axis ") + item[0] + " given twice");
    seen[a] = true;
    std::vector<std::string> parts;
    std::stringstream ps(item.substr(2));
    std::string part;
    while (std::getline(ps, part, ':')) parts.push_back(part);
    if (parts.size() == 1) {
      g.lo[a] = g.hi[a] = parse_bound(parts[0]);
      g.n[a] = 1;
    } else if (parts.size() == 3) {
      g.lo[a] = parse_bound(parts[0]);
      g.hi[a] = parse_bound(parts[1]);
      const int count = std::stoi(parts[2]);
      if (count < 1) throw std::invalid_argument("grid: point count must be >= 1");
      g.n[a] = count;
    } else {
      throw std::invalid_argument("grid: expected lo:hi:n or a single value, got '" + item + "'");
    }
  }
  return g;
}

double FieldCheckRow::relative_residual() const {
  if (!valid || residuals.jacobian_norm == 0.0) return 0.0;
  return std::max({residuals.divergence, residuals.curl.norm(), residuals.jacobian_error}) /
         residuals.jacobian_norm;
}

std::vector<FieldCheckRow> field_check(const RunConfig& c, const GridSpec& grid, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("field-check: step must be positive");
  const FieldModelPtr field = c.field_model();
  std::vector<FieldCheckRow> rows(grid.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    FieldCheckRow& row = rows[i];
    row.r = grid.point(i);
    try {
      row.sample = field->sample(row.r);
      row.residuals = check_maxwell(*field, row.r, h);
    } catch (const DomainError&) {
      row.valid = false;
    }
  }
  return rows;
}

}  // namespace sgbeam
