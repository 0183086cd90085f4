// sgbeam command-line driver.
//
//   sgbeam estimate two-wire-splitting I=100mA d=1um L=100um v=700m/s
//   sgbeam simulate --config configs/fig4.cfg
//   sgbeam ensemble --config configs/fig5c.cfg --workers 4
//   sgbeam field-check --config configs/fig4.cfg --grid "y=10um:60um:6,z=0um:50um:11"
//   sgbeam sweep --config configs/fig5a.cfg
//
// Exit status: 0 success, 1 runtime error, 2 usage error, 3 config error,
// 4 a check did not pass (field-check residual above the threshold).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgbeam/config.hpp"
#include "sgbeam/estimators.hpp"
#include "sgbeam/io.hpp"
#include "sgbeam/run.hpp"

namespace fs = std::filesystem;
using namespace sgbeam;

namespace {

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2, kConfig = 3, kCheckFailed = 4 };

// Error raised while a named module does its work.
struct ModuleError : std::runtime_error {
  ModuleError(const std::string& module, const std::string& cause)
      : std::runtime_error(module + ": " + cause) {}
};

template <class F>
auto in_module(const char* module, F&& f) {
  try {
    return f();
  } catch (const ConfigParseError&) {
    throw;
  } catch (const ConfigValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModuleError(module, e.what());
  }
}

struct ParamInfo {
  std::string name;
  Dimension dim;
};

// Short spellings accepted on the command line.
ParamInfo estimate_param(const std::string& key) {
  static const std::map<std::string, std::string> alias = {
      {"I", "current"}, {"L", "length"},     {"v", "speed"},      {"m", "mass"},
      {"E", "energy"},  {"eta", "emittance"}, {"dtheta", "divergence"},
      {"dy", "waist"},  {"Bp", "gradient"},   {"B'", "gradient"},  {"dS", "delta_spin"},
      {"y", "height"},  {"h", "height"},      {"dp", "dp_x"}};
  static const std::map<std::string, Dimension> dims = {
      {"current", Dimension::Current},      {"d", Dimension::Length},
      {"length", Dimension::Length},        {"speed", Dimension::Speed},
      {"mass", Dimension::Mass},            {"gradient", Dimension::Gradient},
      {"waist", Dimension::Length},         {"emittance", Dimension::Emittance},
      {"energy", Dimension::Energy},        {"divergence", Dimension::Angle},
      {"a3", Dimension::Field},             {"y0", Dimension::Length},
      {"p", Dimension::Momentum},           {"dp_x", Dimension::Momentum},
      {"g", Dimension::Dimensionless},      {"delta_spin", Dimension::Dimensionless},
      {"height", Dimension::Length}};
  const auto a = alias.find(key);
  const std::string name = a == alias.end() ? key : a->second;
  const auto d = dims.find(name);
  if (d == dims.end()) throw CLI::ValidationError("estimate", "unknown parameter '" + key + "'");
  return {name, d->second};
}

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

// Flag > environment > config file.
fs::path output_dir(const RunConfig& c, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const std::string e = env("SGBEAM_OUTPUT_DIR"); !e.empty()) return e;
  return c.output.directory;
}

int workers(const RunConfig& c, int flag) {
  if (flag > 0) return flag;
  if (const std::string e = env("SGBEAM_WORKERS"); !e.empty()) {
    try {
      const int n = std::stoi(e);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "sgbeam: ignoring SGBEAM_WORKERS='" << e << "'\n";
  }
  return c.ensemble.workers > 0 ? c.ensemble.workers : default_worker_count();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_line(const char* label, const std::string& value) {
  std::printf("  %-28s %s\n", label, value.c_str());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct CommonOptions {
  std::string config;
  std::string engine;
  std::string out_dir;
  std::string prefix;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("-c,--config", o.config, "Run configuration file")->required()->check(
      CLI::ExistingFile);
  app->add_option("--engine", o.engine, "Override the engine")->check(
      CLI::IsMember({"full", "adiabatic"}));
  app->add_option("-o,--output-dir", o.out_dir, "Output directory (overrides SGBEAM_OUTPUT_DIR)");
  app->add_option("--prefix", o.prefix, "Output file prefix");
}

RunConfig load(const CommonOptions& o) {
  std::optional<Engine> engine;
  if (!o.engine.empty()) engine = parse_engine(o.engine);
  RunConfig c = load_config(o.config, engine);
  if (!o.prefix.empty()) c.output.prefix = o.prefix;
  return c;
}

int cmd_estimate(const std::string& name, const std::vector<std::string>& args, bool as_json,
                 const std::string& out_file) {
  const auto& cat = estimate_catalogue();
  if (std::none_of(cat.begin(), cat.end(), [&](const auto& s) { return s.name == name; })) {
    throw CLI::ValidationError("estimate", "unknown estimate '" + name + "' (see --list)");
  }
  std::map<std::string, double> inputs;
  for (const std::string& a : args) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("estimate", "expected key=value, got '" + a + "'");
    }
    const ParamInfo info = estimate_param(a.substr(0, eq));
    try {
      inputs[info.name] = parse_quantity(a.substr(eq + 1), info.dim);
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("estimate", info.name + ": " + e.what());
    }
  }
  const EstimateReport r = in_module("estimators", [&] { return run_estimate(name, inputs); });
  if (as_json) {
    std::cout << io::estimate_json(r).dump(2) << '\n';
  } else {
    std::cout << io::estimate_text(r);
  }
  if (!out_file.empty()) io::write_json_file(out_file, io::estimate_json(r));
  return kOk;
}

void list_estimates() {
  for (const EstimateSignature& s : estimate_catalogue()) {
    std::cout << s.name << ":";
    for (const auto& k : s.required) std::cout << ' ' << k;
    for (const auto& [k, v] : s.defaults) std::cout << " [" << k << '=' << v << ']';
    std::cout << "\n  " << s.summary << '\n';
  }
}

int cmd_simulate(const CommonOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = load(o);
  const SimulationResult res = in_module("dynamics", [&] { return simulate(c); });
  const fs::path dir = output_dir(c, o.out_dir);

  std::vector<fs::path> written;
  for (const SpinRun& r : res.runs) {
    const std::string stem = c.output.prefix + "_" + to_string(r.spin);
    if (r.full) {
      const fs::path p = dir / (stem + ".csv");
      auto out = io::open_output(p);
      io::write_trajectory_csv(out, *r.full);
      written.push_back(p);
    }
    if (r.adiabatic) {
      const fs::path p = dir / (stem + "_reduced.csv");
      auto out = io::open_output(p);
      io::write_reduced_csv(out, *r.adiabatic);
      written.push_back(p);
    }
  }
  const io::json summary = io::simulation_summary(c, res);
  const fs::path sp = dir / (c.output.prefix + "_summary.json");
  io::write_json_file(sp, summary);
  written.push_back(sp);

  std::printf("simulate: %s scenario, %s engine, %zu spin state(s)\n", to_string(c.scenario),
              to_string(res.engine), res.runs.size());
  for (const SpinRun& r : res.runs) {
    std::printf(" %s: %s\n", to_string(r.spin), to_string(r.status));
    print_line("final angle y-z (mrad)", fmt("%.4f", vertical_angle(r.final.v) * 1e3));
    print_line("final angle x-z (mrad)", fmt("%.4f", horizontal_angle(r.final.v) * 1e3));
    print_line("closest approach (um)", fmt("%.4f", r.closest_approach * 1e6));
    if (r.full) {
      const auto& d = r.full->diagnostics;
      print_line("energy drift (rel)", fmt("%.3e", d.energy_drift));
      print_line("spin norm drift", fmt("%.3e", d.max_spin_norm_drift));
      print_line("max x excursion (nm)", fmt("%.3f", d.max_x_excursion * 1e9));
      print_line("steps", std::to_string(d.accepted_steps));
    } else if (r.adiabatic) {
      print_line("max adiabaticity", fmt("%.3e", r.adiabatic->max_adiabaticity));
      print_line("steps", std::to_string(r.adiabatic->accepted_steps));
    }
  }
  if (summary.contains("separation")) {
    const auto& s = summary["separation"];
    std::printf(" separation of the first two spin states\n");
    print_line("angle y-z (mrad)", fmt("%.4f", s["vertical_angle"].get<double>() * 1e3));
    print_line("angle x-z (mrad)", fmt("%.4f", s["horizontal_angle"].get<double>() * 1e3));
    print_line("final distance (um)", fmt("%.3f", s["final_distance"].get<double>() * 1e6));
  }
  for (const auto& p : written) std::printf(" wrote %s\n", p.string().c_str());
  std::printf(" runtime %.2f s\n", seconds_since(t0));
  return kOk;
}

int cmd_ensemble(const CommonOptions& o, int worker_flag, long count, long long seed) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c = load(o);
  if (count > 0) c.ensemble.count = static_cast<std::size_t>(count);
  if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
  const int w = workers(c, worker_flag);
  const EnsembleResult res = in_module("ensemble", [&] { return run_config_ensemble(c, w); });
  const fs::path dir = output_dir(c, o.out_dir);

  const fs::path ions = dir / (c.output.prefix + "_ions.csv");
  {
    auto out = io::open_output(ions);
    io::write_ensemble_csv(out, res);
  }
  const fs::path hist = dir / (c.output.prefix + "_histogram.csv");
  {
    auto out = io::open_output(hist);
    io::write_histogram_csv(out, velocity_histograms(res, c.ensemble.bins_vz, c.ensemble.bins_vy));
  }
  const io::json summary = io::ensemble_summary(c, res);
  const fs::path sp = dir / (c.output.prefix + "_ensemble.json");
  io::write_json_file(sp, summary);

  std::printf("ensemble: %zu ions, %s engine, seed %llu, %d worker(s)\n", res.records.size(),
              to_string(res.engine), static_cast<unsigned long long>(res.seed), w);
  for (const SpinSummary& s : res.spins) {
    std::printf(" %s: %zu ions, %zu crashed, %zu failed\n", s.label.c_str(), s.count, s.crashed,
                s.failed);
    print_line("mean angle (mrad)", fmt("%.4f", s.mean_angle * 1e3));
    print_line("angle spread (mrad)", fmt("%.4f", s.angle_spread * 1e3));
    print_line("mean closest approach (um)", fmt("%.3f", s.mean_closest * 1e6));
  }
  print_line("resolution ratio", fmt("%.3f", res.resolution_ratio));
  if (summary.contains("focus")) {
    print_line("fraction in focus band", fmt("%.4f", summary["focus"]["fraction_inside"].get<double>()));
  }
  for (const auto& p : {ions, hist, sp}) std::printf(" wrote %s\n", p.string().c_str());
  std::printf(" runtime %.2f s\n", seconds_since(t0));
  return kOk;
}

int cmd_field_check(const CommonOptions& o, const std::string& grid_text, const std::string& step,
                    double threshold) {
  const RunConfig c = load(o);
  GridSpec grid;
  double h = 0.0;
  try {
    grid = parse_grid(grid_text);
    h = parse_quantity(step, Dimension::Length);
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("field-check", e.what());
  }
  const auto rows = in_module("fields", [&] { return field_check(c, grid, h); });
  const fs::path dir = output_dir(c, o.out_dir);
  const fs::path p = dir / (c.output.prefix + "_field_check.csv");
  {
    auto out = io::open_output(p);
    io::write_field_check_csv(out, rows);
  }
  std::size_t valid = 0, over = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    if (!r.valid) continue;
    ++valid;
    worst = std::max(worst, r.relative_residual());
    if (r.relative_residual() > threshold) ++over;
  }
  std::printf("field-check: %zu points (%zu inside conductors skipped)\n", rows.size(),
              rows.size() - valid);
  print_line("worst relative residual", fmt("%.3e", worst));
  print_line("threshold", fmt("%.1e", threshold));
  print_line("points above threshold", std::to_string(over));
  std::printf(" wrote %s\n", p.string().c_str());
  return over == 0 ? kOk : kCheckFailed;
}

int cmd_sweep(const CommonOptions& o) {
  const RunConfig c = load(o);
  const auto pts = in_module("adiabatic", [&] { return run_config_sweep(c); });
  const fs::path p = output_dir(c, o.out_dir) / (c.output.prefix + "_sweep.csv");
  {
    auto out = io::open_output(p);
    io::write_sweep_csv(out, pts);
  }
  std::size_t crashed = 0;
  for (const auto& a : pts) crashed += a.crashed;
  std::printf("sweep: %zu points over |v_y0| in [%.3f, %.3f] m/s, %zu crashed or truncated\n",
              pts.size(), c.sweep->vy_min, c.sweep->vy_max, crashed);
  std::printf(" wrote %s\n", p.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stern-Gerlach splitting of slow ion beams"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sgbeam 0.1.0");

  // estimate
  auto* est = app.add_subcommand("estimate", "Evaluate a closed-form estimate");
  std::string est_name;
  std::vector<std::string> est_args;
  bool est_json = false, est_list = false;
  std::string est_out;
  est->add_option("name", est_name, "Estimate name (see --list)");
  est->add_option("params", est_args, "key=value with units, e.g. I=100mA d=1um");
  est->add_flag("--json", est_json, "Print the report as JSON");
  est->add_flag("--list", est_list, "List the available estimates");
  est->add_option("--output", est_out, "Also write the JSON report to this file");

  // simulate
  CommonOptions sim_o;
  auto* sim = app.add_subcommand("simulate", "Integrate the configured launch for each spin");
  add_common(sim, sim_o);

  // ensemble
  CommonOptions ens_o;
  int ens_workers = 0;
  long ens_count = 0;
  long long ens_seed = -1;
  auto* ens = app.add_subcommand("ensemble", "Run a Monte Carlo beam");
  add_common(ens, ens_o);
  ens->add_option("-j,--workers", ens_workers, "Worker threads (overrides SGBEAM_WORKERS)")
      ->check(CLI::PositiveNumber);
  ens->add_option("-n,--count", ens_count, "Number of ions")->check(CLI::PositiveNumber);
  ens->add_option("--seed", ens_seed, "Root seed")->check(CLI::NonNegativeNumber);

  // field-check
  CommonOptions fc_o;
  std::string fc_grid, fc_step = "10 nm";
  double fc_threshold = 1e-6;
  auto* fc = app.add_subcommand("field-check", "Dump B and J on a grid with Maxwell residuals");
  add_common(fc, fc_o);
  fc->add_option("--grid", fc_grid, "x=lo:hi:n,y=lo:hi:n,z=lo:hi:n with units")->required();
  fc->add_option("--step", fc_step, "Finite-difference step with unit")->capture_default_str();
  fc->add_option("--threshold", fc_threshold, "Relative residual limit")->capture_default_str();

  // sweep
  CommonOptions sw_o;
  auto* sw = app.add_subcommand("sweep", "Closest approach against |v_y0| for both spins");
  add_common(sw, sw_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (est->parsed()) {
      if (est_list) {
        list_estimates();
        return kOk;
      }
      if (est_name.empty()) throw CLI::ValidationError("estimate", "missing estimate name");
      return cmd_estimate(est_name, est_args, est_json, est_out);
    }
    if (sim->parsed()) return cmd_simulate(sim_o);
    if (ens->parsed()) return cmd_ensemble(ens_o, ens_workers, ens_count, ens_seed);
    if (fc->parsed()) return cmd_field_check(fc_o, fc_grid, fc_step, fc_threshold);
    if (sw->parsed()) return cmd_sweep(sw_o);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "sgbeam: " << e.what() << "\n\n";
    for (CLI::App* sub : app.get_subcommands()) std::cerr << sub->help();
    return kUsage;
  } catch (const ConfigParseError& e) {
    std::cerr << "sgbeam: config: " << e.what() << '\n';
    return kConfig;
  } catch (const ConfigValidationError& e) {
    std::cerr << "sgbeam: config: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "sgbeam: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
