#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "sgbeam/adiabatic.hpp"
#include "sgbeam/config.hpp"
#include "sgbeam/estimators.hpp"
#include "sgbeam/io.hpp"
#include "sgbeam/run.hpp"

namespace py = pybind11;
using namespace sgbeam;

namespace {

std::optional<Engine> engine_arg(const std::optional<std::string>& name) {
  if (!name) return std::nullopt;
  return parse_engine(*name);
}

// JSON documents cross over as text; the Python side decodes them.
py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

py::array_t<double> trajectory_array(const Trajectory& tr) {
  py::array_t<double> out({static_cast<py::ssize_t>(tr.samples.size()), py::ssize_t{10}});
  auto a = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const IonState& s = tr.samples[static_cast<std::size_t>(i)];
    a(i, 0) = s.t;
    for (int k = 0; k < 3; ++k) {
      a(i, 1 + k) = s.r[k];
      a(i, 4 + k) = s.v[k];
      a(i, 7 + k) = s.S[k];
    }
  }
  return out;
}

py::array_t<double> reduced_array(const AdiabaticTrajectory& tr) {
  py::array_t<double> out({static_cast<py::ssize_t>(tr.samples.size()), py::ssize_t{10}});
  auto a = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const AdiabaticSample& s = tr.samples[static_cast<std::size_t>(i)];
    const double row[10] = {s.t,
                            s.z,
                            s.y,
                            s.vy,
                            s.vz,
                            s.terms.lorentz,
                            s.terms.image,
                            s.terms.ponderomotive,
                            s.terms.stern_gerlach,
                            s.terms.total()};
    for (int k = 0; k < 10; ++k) a(i, k) = row[k];
  }
  return out;
}

py::dict simulate_py(const RunConfig& cfg) {
  SimulationResult result;
  {
    py::gil_scoped_release release;
    result = simulate(cfg);
  }
  py::dict out;
  out["summary"] = to_python(io::simulation_summary(cfg, result));
  py::dict paths;
  for (const SpinRun& r : result.runs) {
    if (r.full) paths[to_string(r.spin)] = trajectory_array(*r.full);
    if (r.adiabatic) paths[to_string(r.spin)] = reduced_array(*r.adiabatic);
  }
  out["trajectories"] = paths;
  const std::vector<std::string> columns =
      result.engine == Engine::Full
          ? std::vector<std::string>{"t", "x", "y", "z", "vx", "vy", "vz", "Sx", "Sy", "Sz"}
          : std::vector<std::string>{"t", "z", "y", "vy", "vz", "a_lorentz", "a_image",
                                     "a_ponderomotive", "a_stern_gerlach", "a_total"};
  out["columns"] = py::tuple(py::cast(columns));
  return out;
}

py::dict ensemble_py(const RunConfig& cfg, int workers) {
  EnsembleResult result;
  {
    py::gil_scoped_release release;
    result = run_config_ensemble(cfg, workers);
  }
  const auto n = static_cast<py::ssize_t>(result.records.size());
  py::array_t<double> closest(n), angle(n), vy(n), vz(n);
  py::array_t<bool> crashed(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    const IonRecord& r = result.records[static_cast<std::size_t>(i)];
    closest.mutable_at(i) = r.closest_approach;
    angle.mutable_at(i) = r.angle;
    vy.mutable_at(i) = r.final.v.y();
    vz.mutable_at(i) = r.final.v.z();
    crashed.mutable_at(i) = r.status == TrajectoryStatus::Crashed;
  }
  py::dict out;
  out["summary"] = to_python(io::ensemble_summary(cfg, result));
  out["closest_approach"] = closest;
  out["angle"] = angle;
  out["vy"] = vy;
  out["vz"] = vz;
  out["crashed"] = crashed;
  return out;
}

py::tuple field_py(const RunConfig& cfg, py::array_t<double, py::array::c_style | py::array::forcecast> pts) {
  if (pts.ndim() != 2 || pts.shape(1) != 3) throw py::value_error("points must have shape (n, 3)");
  const FieldModelPtr field = cfg.field_model();
  const py::ssize_t n = pts.shape(0);
  py::array_t<double> B({n, py::ssize_t{3}});
  py::array_t<double> J({n, py::ssize_t{3}, py::ssize_t{3}});
  auto p = pts.unchecked<2>();
  auto b = B.mutable_unchecked<2>();
  auto j = J.mutable_unchecked<3>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const FieldSample s = field->sample(Vec3(p(i, 0), p(i, 1), p(i, 2)));
    for (int r = 0; r < 3; ++r) {
      b(i, r) = s.B[r];
      for (int c = 0; c < 3; ++c) j(i, r, c) = s.J(r, c);
    }
  }
  return py::make_tuple(B, J);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stern-Gerlach splitting of slow ion beams";

  static py::exception<ConfigParseError> parse_error(m, "ConfigParseError", PyExc_ValueError);
  static py::exception<ConfigValidationError> validation_error(m, "ConfigValidationError",
                                                               PyExc_ValueError);
  static py::exception<DomainError> domain_error(m, "DomainError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigParseError& e) {
      py::object exc = py::reinterpret_borrow<py::object>(parse_error.ptr())(e.what());
      exc.attr("line") = e.line();
      exc.attr("column") = e.column();
      PyErr_SetObject(parse_error.ptr(), exc.ptr());
    } catch (const ConfigValidationError& e) {
      PyErr_SetString(validation_error.ptr(), e.what());
    } catch (const DomainError& e) {
      PyErr_SetString(domain_error.ptr(), e.what());
    }
  });

  py::class_<RunConfig>(m, "RunConfig")
      .def_property_readonly("scenario", [](const RunConfig& c) { return to_string(c.scenario); })
      .def_property_readonly("engine", [](const RunConfig& c) { return to_string(c.engine); })
      .def_readonly("seed", &RunConfig::seed)
      .def_readonly("window_length", &RunConfig::window_length)
      .def_property_readonly("speed", [](const RunConfig& c) { return c.launch.speed; })
      .def("serialize", &serialize_config, "Canonical config text in SI units")
      .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; })
      .def("__repr__", [](const RunConfig& c) {
        return "<RunConfig " + std::string(to_string(c.scenario)) + ", " + to_string(c.engine) + ">";
      });

  m.def(
      "parse_config",
      [](const std::string& text, std::optional<std::string> engine) {
        return parse_config(text, engine_arg(engine));
      },
      py::arg("text"), py::arg("engine") = py::none(), "Parse config text");
  m.def(
      "load_config",
      [](const std::string& path, std::optional<std::string> engine) {
        return load_config(path, engine_arg(engine));
      },
      py::arg("path"), py::arg("engine") = py::none(), "Read and parse a config file");

  m.def("simulate", &simulate_py, py::arg("config"),
        "Integrate each configured spin state; returns summary and trajectory arrays");
  m.def("run_ensemble", &ensemble_py, py::arg("config"), py::arg("workers") = 0,
        "Sample the [source] ensemble and integrate every ion");
  m.def(
      "closest_approach_sweep",
      [](const RunConfig& cfg) {
        std::vector<ApproachPoint> pts;
        {
          py::gil_scoped_release release;
          pts = run_config_sweep(cfg);
        }
        py::list out;
        for (const ApproachPoint& p : pts) {
          out.append(py::dict(py::arg("vy0") = p.vy0, py::arg("spin") = p.spin,
                              py::arg("closest") = p.closest, py::arg("crashed") = p.crashed));
        }
        return out;
      },
      py::arg("config"), "Closest approach against launch v_y for both spin branches");
  m.def("field", &field_py, py::arg("config"), py::arg("points"),
        "B (n, 3) in T and J (n, 3, 3) with J[i, j] = dB_i/dx_j in T/m");

  m.def(
      "estimate",
      [](const std::string& name, const std::map<std::string, double>& inputs) {
        return to_python(io::estimate_json(run_estimate(name, inputs)));
      },
      py::arg("name"), py::arg("inputs"), "Closed-form estimate with SI inputs");
  m.def("estimate_names", [] {
    std::vector<std::string> names;
    for (const EstimateSignature& s : estimate_catalogue()) names.push_back(s.name);
    return names;
  });
  m.def("crash_bias_minimum", [](double vz, double y) { return crash_bias_minimum(vz, y); },
        py::arg("vz"), py::arg("y"), "Bias field (T) balancing the image attraction at height y");
}
