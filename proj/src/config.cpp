#include "sgbeam/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "sgbeam/kinematics.hpp"
#include "sgbeam/units.hpp"

namespace sgbeam {

namespace {

struct UnitDef {
  const char* name;
  Dimension dim;
  double factor;
};

const std::vector<UnitDef>& unit_table() {
  static const std::vector<UnitDef> t = {
      {"m", Dimension::Length, 1.0},
      {"cm", Dimension::Length, 1e-2},
      {"mm", Dimension::Length, units::mm},
      {"um", Dimension::Length, units::um},
      {"nm", Dimension::Length, units::nm},
      {"s", Dimension::Time, 1.0},
      {"ms", Dimension::Time, units::ms},
      {"us", Dimension::Time, units::us},
      {"ns", Dimension::Time, units::ns},
      {"ps", Dimension::Time, 1e-12},
      {"A", Dimension::Current, 1.0},
      {"mA", Dimension::Current, units::mA},
      {"uA", Dimension::Current, units::uA},
      {"T", Dimension::Field, 1.0},
      {"mT", Dimension::Field, units::mT},
      {"uT", Dimension::Field, 1e-6},
      {"G", Dimension::Field, units::gauss},
      {"T/m", Dimension::Gradient, 1.0},
      {"G/cm", Dimension::Gradient, units::gauss / 1e-2},
      {"m/s", Dimension::Speed, 1.0},
      {"km/s", Dimension::Speed, units::km_per_s},
      {"J", Dimension::Energy, 1.0},
      {"eV", Dimension::Energy, units::eV},
      {"meV", Dimension::Energy, units::meV},
      {"ueV", Dimension::Energy, units::ueV},
      {"rad", Dimension::Angle, 1.0},
      {"mrad", Dimension::Angle, units::mrad},
      {"urad", Dimension::Angle, units::urad},
      {"deg", Dimension::Angle, codata::pi / 180.0},
      {"kg", Dimension::Mass, 1.0},
      {"amu", Dimension::Mass, units::amu},
      {"kg*m/s", Dimension::Momentum, 1.0},
      {"m*rad*sqrt(J)", Dimension::Emittance, 1.0},
      {"nm*mrad*sqrt(eV)", Dimension::Emittance, 1e-12 * std::sqrt(codata::elementary_charge)},
  };
  return t;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// --- raw document ----------------------------------------------------------

struct Entry {
  std::string value;
  int line = 0;
  int key_col = 0;
  int value_col = 0;
  bool used = false;
};

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> keys;
  std::vector<std::string> order;
};

struct Document {
  std::map<std::string, Section> sections;  // "" holds top-level keys
};

Document tokenize(const std::string& text) {
  Document doc;
  doc.sections[""].line = 0;
  Section* current = &doc.sections[""];
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const int col = static_cast<int>(first) + 1;

    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string::npos) throw ConfigParseError(line_no, col, "unterminated section header");
      if (!trim(line.substr(close + 1)).empty()) {
        throw ConfigParseError(line_no, static_cast<int>(close) + 2, "text after section header");
      }
      const std::string name = trim(line.substr(first + 1, close - first - 1));
      if (name.empty()) throw ConfigParseError(line_no, col, "empty section name");
      if (doc.sections.count(name)) {
        throw ConfigParseError(line_no, col, "duplicate section [" + name + "]");
      }
      current = &doc.sections[name];
      current->name = name;
      current->line = line_no;
      continue;
    }

    const auto eq = line.find('=', first);
    if (eq == std::string::npos) throw ConfigParseError(line_no, col, "expected 'key = value'");
    const std::string key = trim(line.substr(first, eq - first));
    if (key.empty()) throw ConfigParseError(line_no, col, "missing key before '='");
    for (char c : key) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
        throw ConfigParseError(line_no, col, "invalid key '" + key + "'");
      }
    }
    const auto vstart = line.find_first_not_of(" \t", eq + 1);
    const std::string value = vstart == std::string::npos ? "" : trim(line.substr(vstart));
    if (value.empty()) {
      throw ConfigParseError(line_no, static_cast<int>(eq) + 2, "missing value for '" + key + "'");
    }
    if (current->keys.count(key)) {
      throw ConfigParseError(line_no, col, "duplicate key '" + key + "'");
    }
    current->keys[key] = Entry{value, line_no, col, static_cast<int>(vstart) + 1, false};
    current->order.push_back(key);
  }
  return doc;
}

// --- typed access ----------------------------------------------------------

class Reader {
 public:
  Reader(Section* s, std::string name, std::vector<std::string>* missing)
      : s_(s), name_(std::move(name)), missing_(missing) {}

  bool has(const std::string& key) const { return s_ && s_->keys.count(key); }

  std::optional<double> quantity(const std::string& key, Dimension dim) {
    Entry* e = take(key);
    if (!e) return std::nullopt;
    try {
      return parse_quantity(e->value, dim);
    } catch (const std::invalid_argument& err) {
      throw ConfigParseError(e->line, e->value_col, key + ": " + err.what());
    }
  }

  // Like quantity() but "none" clears the value.
  std::optional<double> optional_quantity(const std::string& key, Dimension dim,
                                          std::optional<double> fallback) {
    Entry* e = peek(key);
    if (!e) return fallback;
    if (e->value == "none") {
      e->used = true;
      return std::nullopt;
    }
    return quantity(key, dim);
  }

  double required(const std::string& key, Dimension dim) {
    const auto v = quantity(key, dim);
    if (!v) {
      missing_->push_back(qualified(key));
      return 0.0;
    }
    return *v;
  }

  double value_or(const std::string& key, Dimension dim, double fallback) {
    return quantity(key, dim).value_or(fallback);
  }

  long integer(const std::string& key, long fallback, long min_value) {
    Entry* e = take(key);
    if (!e) return fallback;
    long v = 0;
    const char* b = e->value.data();
    const char* end = b + e->value.size();
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigParseError(e->line, e->value_col, key + ": expected an integer, got '" +
                                                        e->value + "'");
    }
    if (v < min_value) {
      throw ConfigParseError(e->line, e->value_col,
                             key + ": must be >= " + std::to_string(min_value));
    }
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    Entry* e = take(key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const char* b = e->value.data();
    const char* end = b + e->value.size();
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigParseError(e->line, e->value_col,
                             key + ": expected a non-negative integer, got '" + e->value + "'");
    }
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    Entry* e = take(key);
    if (!e) return fallback;
    const std::string& v = e->value;
    if (v == "true" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "no" || v == "off") return false;
    throw ConfigParseError(e->line, e->value_col, key + ": expected true or false, got '" + v + "'");
  }

  std::string text(const std::string& key, const std::string& fallback) {
    Entry* e = take(key);
    return e ? e->value : fallback;
  }

  // Applies `parse` to the value, reporting its exceptions at the value.
  template <class T, class F>
  T choice(const std::string& key, T fallback, F&& parse) {
    Entry* e = take(key);
    if (!e) return fallback;
    try {
      return parse(e->value);
    } catch (const std::invalid_argument& err) {
      throw ConfigParseError(e->line, e->value_col, key + ": " + err.what());
    }
  }

 private:
  Entry* peek(const std::string& key) {
    if (!s_) return nullptr;
    auto it = s_->keys.find(key);
    return it == s_->keys.end() ? nullptr : &it->second;
  }
  Entry* take(const std::string& key) {
    Entry* e = peek(key);
    if (e) e->used = true;
    return e;
  }
  std::string qualified(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  Section* s_;
  std::string name_;
  std::vector<std::string>* missing_;
};

const std::set<std::string>& known_sections() {
  static const std::set<std::string> s = {"",       "grating", "multipole", "two_wire",
                                          "bias",   "image",   "launch",    "window",
                                          "integrator", "source", "ensemble", "focus",
                                          "sweep",  "output"};
  return s;
}

std::vector<SpinPreparation> parse_spin_list(const std::string& text) {
  std::vector<SpinPreparation> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_spin_preparation(trim(item)));
  if (out.empty()) throw std::invalid_argument("empty spin list");
  return out;
}

SplitPlane parse_plane(const std::string& s) {
  if (s == "vertical") return SplitPlane::Vertical;
  if (s == "horizontal") return SplitPlane::Horizontal;
  throw std::invalid_argument("expected vertical or horizontal, got '" + s + "'");
}

WireModel parse_wire_model(const std::string& s) {
  if (s == "thin") return WireModel::Thin;
  if (s == "filament") return WireModel::Filament;
  throw std::invalid_argument("expected thin or filament, got '" + s + "'");
}

template <class F>
void validated(const char* what, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    throw ConfigValidationError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(Dimension d) {
  switch (d) {
    case Dimension::Dimensionless: return "dimensionless";
    case Dimension::Length: return "length";
    case Dimension::Time: return "time";
    case Dimension::Current: return "current";
    case Dimension::Field: return "magnetic field";
    case Dimension::Gradient: return "field gradient";
    case Dimension::Speed: return "speed";
    case Dimension::Energy: return "energy";
    case Dimension::Angle: return "angle";
    case Dimension::Mass: return "mass";
    case Dimension::Momentum: return "momentum";
    case Dimension::Emittance: return "emittance";
  }
  return "unknown";
}

const char* canonical_unit(Dimension d) {
  switch (d) {
    case Dimension::Dimensionless: return "";
    case Dimension::Length: return "m";
    case Dimension::Time: return "s";
    case Dimension::Current: return "A";
    case Dimension::Field: return "T";
    case Dimension::Gradient: return "T/m";
    case Dimension::Speed: return "m/s";
    case Dimension::Energy: return "J";
    case Dimension::Angle: return "rad";
    case Dimension::Mass: return "kg";
    case Dimension::Momentum: return "kg*m/s";
    case Dimension::Emittance: return "m*rad*sqrt(J)";
  }
  return "";
}

std::vector<std::string> units_for(Dimension d) {
  std::vector<std::string> out;
  for (const auto& u : unit_table()) {
    if (u.dim == d) out.emplace_back(u.name);
  }
  return out;
}

double parse_quantity(const std::string& text, Dimension expected) {
  const std::string s = trim(text);
  double value = 0.0;
  const char* b = s.data();
  const char* end = b + s.size();
  const auto res = std::from_chars(b, end, value);
  if (res.ec != std::errc() || res.ptr == b) {
    throw std::invalid_argument("expected a number, got '" + s + "'");
  }
  if (!std::isfinite(value)) throw std::invalid_argument("value must be finite");
  const std::string unit = trim(std::string(res.ptr, end));
  if (unit.empty()) {
    if (expected == Dimension::Dimensionless) return value;
    std::string accepted;
    for (const auto& u : units_for(expected)) accepted += (accepted.empty() ? "" : ", ") + u;
    throw std::invalid_argument("missing unit for a " + std::string(to_string(expected)) +
                                " (use one of: " + accepted + ")");
  }
  for (const auto& u : unit_table()) {
    if (unit != u.name) continue;
    if (u.dim != expected) {
      throw std::invalid_argument("unit '" + unit + "' is a " + to_string(u.dim) + ", expected a " +
                                  to_string(expected));
    }
    return value * u.factor;
  }
  throw std::invalid_argument("unknown unit '" + unit + "'");
}

ConfigParseError::ConfigParseError(int line, int column, const std::string& message,
                                   const std::string& source)
    : std::runtime_error(source.empty()
                             ? "line " + std::to_string(line) + ", column " +
                                   std::to_string(column) + ": " + message
                             : source + ":" + std::to_string(line) + ":" +
                                   std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(message) {}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Multipole: return "multipole";
    case Scenario::TwoWire: return "two_wire";
    case Scenario::Grating: return "grating";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

RunConfig parse_config(const std::string& text, std::optional<Engine> engine) {
  Document doc = tokenize(text);
  for (const auto& [name, sec] : doc.sections) {
    if (!known_sections().count(name)) {
      throw ConfigParseError(sec.line, 1, "unknown section [" + name + "]");
    }
  }
  auto section = [&](const char* name) -> Section* {
    auto it = doc.sections.find(name);
    return it == doc.sections.end() ? nullptr : &it->second;
  };

  std::vector<std::string> missing;
  RunConfig c;

  const int scenario_blocks = (section("grating") != nullptr) + (section("multipole") != nullptr) +
                              (section("two_wire") != nullptr);
  if (scenario_blocks > 1) {
    throw ConfigValidationError(
        "exactly one scenario block ([grating], [multipole] or [two_wire]) is allowed, found " +
        std::to_string(scenario_blocks));
  }
  if (scenario_blocks == 0) missing.push_back("scenario block [grating|multipole|two_wire]");

  Reader top(section(""), "", &missing);
  c.engine = top.choice("engine", Engine::Full, parse_engine);
  if (engine) c.engine = *engine;
  c.seed = top.unsigned_integer("seed", 1);

  if (Section* s = section("grating")) {
    Reader r(s, s->name, &missing);
    c.scenario = Scenario::Grating;
    GratingParams g;
    g.current = r.required("current", Dimension::Current);
    g.width = r.required("width", Dimension::Length);
    g.thickness = r.required("thickness", Dimension::Length);
    g.pitch = r.required("pitch", Dimension::Length);
    g.n_max = static_cast<int>(r.integer("harmonics", 9, 1));
    g.surface_amplitude = r.optional_quantity("surface_amplitude", Dimension::Field, std::nullopt);
    c.grating = g;
  }
  if (Section* s = section("multipole")) {
    Reader r(s, s->name, &missing);
    c.scenario = Scenario::Multipole;
    MultipoleParams m;
    m.a2 = r.value_or("a2", Dimension::Field, 0.0);
    m.a3 = r.value_or("a3", Dimension::Field, 0.0);
    m.a4 = r.value_or("a4", Dimension::Field, 0.0);
    m.y0 = r.required("y0", Dimension::Length);
    c.multipole = m;
  }
  if (Section* s = section("two_wire")) {
    Reader r(s, s->name, &missing);
    c.scenario = Scenario::TwoWire;
    TwoWireParams w;
    w.current = r.required("current", Dimension::Current);
    w.half_separation = r.required("half_separation", Dimension::Length);
    w.width = r.value_or("width", Dimension::Length, 0.0);
    w.thickness = r.value_or("thickness", Dimension::Length, 0.0);
    w.length = r.value_or("length", Dimension::Length, 0.0);
    w.model = r.choice("model", WireModel::Thin, parse_wire_model);
    w.filaments = static_cast<int>(r.integer("filaments", 16, 1));
    c.two_wire = w;
  }

  {
    Reader r(section("bias"), "bias", &missing);
    c.bias = {r.value_or("x", Dimension::Field, 0.0), r.value_or("y", Dimension::Field, 0.0),
              r.value_or("z", Dimension::Field, 0.0)};
  }
  {
    Reader r(section("image"), "image", &missing);
    c.image.enabled = r.boolean("enabled", false);
    c.image.surface_height = r.value_or("surface", Dimension::Length, 0.0);
  }
  {
    Reader r(section("launch"), "launch", &missing);
    c.launch.x = r.value_or("x", Dimension::Length, 0.0);
    c.launch.y = c.grating ? r.required("y", Dimension::Length)
                                                 : r.value_or("y", Dimension::Length, 0.0);
    c.launch.z = r.value_or("z", Dimension::Length, 0.0);
    const auto speed = r.quantity("speed", Dimension::Speed);
    const auto energy = r.quantity("energy", Dimension::Energy);
    if (speed && energy) throw ConfigValidationError("launch: give speed or energy, not both");
    if (energy) {
      if (!(*energy > 0.0)) throw ConfigValidationError("launch.energy must be positive");
      c.launch.speed = kinetic_energy_to_speed(*energy, kCalcium40Mass);
    } else if (speed) {
      c.launch.speed = *speed;
    } else {
      missing.push_back("launch.speed|launch.energy");
    }
    c.launch.incidence = r.value_or("incidence", Dimension::Angle, 0.0);
    c.launch.azimuth = r.value_or("azimuth", Dimension::Angle, 0.0);
    c.launch.spins = r.choice("spins", c.launch.spins, parse_spin_list);
  }
  {
    Reader r(section("window"), "window", &missing);
    c.window_length = r.required("length", Dimension::Length);
  }
  {
    Reader r(section("integrator"), "integrator", &missing);
    IntegratorOptions o = c.engine == Engine::Adiabatic ? adiabatic_default_options()
                                                        : IntegratorOptions{};
    o.rel_tol = r.value_or("rel_tol", Dimension::Dimensionless, o.rel_tol);
    o.abs_tol = r.value_or("abs_tol", Dimension::Dimensionless, o.abs_tol);
    o.max_step = r.value_or("max_step", Dimension::Time, o.max_step);
    o.min_step = r.value_or("min_step", Dimension::Time, o.min_step);
    o.t_max = r.value_or("t_max", Dimension::Time, o.t_max);
    // Only a surface gives a meaningful crash height.
    const std::optional<double> y_min_default =
        c.scenario == Scenario::Grating ? std::optional<double>(2e-6) : std::nullopt;
    o.y_min = r.optional_quantity("y_min", Dimension::Length, y_min_default);
    o.record_stride = static_cast<int>(r.integer("record_stride", o.record_stride, 1));
    o.renormalise_spin = r.boolean("renormalise_spin", o.renormalise_spin);
    o.max_steps = r.integer("max_steps", o.max_steps, 1);
    c.integrator = o;
  }
  if (Section* s = section("source")) {
    Reader r(s, s->name, &missing);
    SourceParams src;
    src.mean_speed = c.launch.speed;
    src.axial_spread = r.value_or("axial_spread", Dimension::Speed, 0.0);
    src.divergence = r.value_or("divergence", Dimension::Angle, 0.0);
    src.emittance_1d = r.required("emittance", Dimension::Emittance);
    src.spin = r.choice("spin", SpinPreparation::MixedX, parse_spin_preparation);
    src.spread_scale = r.value_or("spread_scale", Dimension::Dimensionless, 1.0);
    src.waist = r.optional_quantity("waist", Dimension::Length, std::nullopt);
    c.source = src;
  }
  {
    Reader r(section("ensemble"), "ensemble", &missing);
    c.ensemble.count = static_cast<std::size_t>(r.integer("count", 1000, 1));
    c.ensemble.workers = static_cast<int>(r.integer("workers", 0, 0));
    c.ensemble.bins_vz = static_cast<int>(r.integer("bins_vz", 60, 1));
    c.ensemble.bins_vy = static_cast<int>(r.integer("bins_vy", 60, 1));
    c.ensemble.plane = r.choice("plane", SplitPlane::Vertical, parse_plane);
  }
  if (Section* s = section("focus")) {
    Reader r(s, s->name, &missing);
    c.focus.target = r.required("target", Dimension::Length);
    c.focus.tolerance = r.required("tolerance", Dimension::Length);
    c.focus.enabled = r.boolean("enabled", true);
  }
  if (Section* s = section("sweep")) {
    Reader r(s, s->name, &missing);
    SweepConfig sw;
    sw.vy_min = r.required("vy_min", Dimension::Speed);
    sw.vy_max = r.required("vy_max", Dimension::Speed);
    sw.points = static_cast<int>(r.integer("points", 50, 2));
    sw.floor = r.value_or("floor", Dimension::Length, 1e-6);
    c.sweep = sw;
  }
  {
    Reader r(section("output"), "output", &missing);
    c.output.directory = r.text("directory", ".");
    c.output.prefix = r.text("prefix", "run");
  }

  if (!missing.empty()) {
    std::string msg = "missing required keys:";
    for (const auto& m : missing) msg += " " + m;
    throw ConfigValidationError(msg);
  }
  for (const auto& [name, sec] : doc.sections) {
    for (const auto& key : sec.order) {
      const Entry& e = sec.keys.at(key);
      if (!e.used) {
        throw ConfigParseError(e.line, e.key_col,
                               "unknown key '" + key + "'" +
                                   (name.empty() ? "" : " in [" + name + "]"));
      }
    }
  }

  // Semantic checks.
  if (c.grating) validated("[grating]", [&] { c.grating->validate(); });
  if (c.multipole) validated("[multipole]", [&] { c.multipole->validate(); });
  if (c.two_wire) validated("[two_wire]", [&] { c.two_wire->validate(); });
  if (!(c.launch.speed > 0.0)) throw ConfigValidationError("launch.speed must be positive");
  if (!(c.window_length > 0.0)) throw ConfigValidationError("window.length must be positive");
  validated("[integrator]", [&] { c.integrator.validate(); });
  if (c.source) validated("[source]", [&] { c.source->validate(); });
  if (c.focus.enabled) {
    validated("[focus]", [&] { c.focus.validate(); });
    if (c.scenario != Scenario::Grating) {
      throw ConfigValidationError("[focus] needs the grating scenario");
    }
  }
  if (c.engine == Engine::Adiabatic && c.scenario != Scenario::Grating) {
    throw ConfigValidationError("engine = adiabatic needs the grating scenario");
  }
  if (c.sweep && !(c.sweep->vy_max > c.sweep->vy_min && c.sweep->vy_min > 0.0)) {
    throw ConfigValidationError("[sweep] needs 0 < vy_min < vy_max");
  }
  if (c.ensemble.plane == SplitPlane::Vertical && c.image.enabled && c.scenario != Scenario::Grating) {
    // Allowed, but the image plane only makes sense with a surface below the beam.
  }
  return c;
}

RunConfig load_config(const std::string& path, std::optional<Engine> engine) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), engine);
  } catch (const ConfigParseError& e) {
    throw ConfigParseError(e.line(), e.column(), e.message(), path);
  } catch (const ConfigValidationError& e) {
    throw ConfigValidationError(path + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  auto q = [&](const char* key, double v, Dimension d) {
    out << key << " = " << format_double(v);
    const std::string u = canonical_unit(d);
    if (!u.empty()) out << ' ' << u;
    out << '\n';
  };
  auto opt = [&](const char* key, const std::optional<double>& v, Dimension d) {
    if (v) {
      q(key, *v, d);
    } else {
      out << key << " = none\n";
    }
  };
  auto b = [](bool v) { return v ? "true" : "false"; };

  out << "engine = " << to_string(c.engine) << '\n';
  out << "seed = " << c.seed << '\n';

  if (c.grating) {
    out << "\n[grating]\n";
    q("current", c.grating->current, Dimension::Current);
    q("width", c.grating->width, Dimension::Length);
    q("thickness", c.grating->thickness, Dimension::Length);
    q("pitch", c.grating->pitch, Dimension::Length);
    out << "harmonics = " << c.grating->n_max << '\n';
    opt("surface_amplitude", c.grating->surface_amplitude, Dimension::Field);
  }
  if (c.multipole) {
    out << "\n[multipole]\n";
    q("a2", c.multipole->a2, Dimension::Field);
    q("a3", c.multipole->a3, Dimension::Field);
    q("a4", c.multipole->a4, Dimension::Field);
    q("y0", c.multipole->y0, Dimension::Length);
  }
  if (c.two_wire) {
    out << "\n[two_wire]\n";
    q("current", c.two_wire->current, Dimension::Current);
    q("half_separation", c.two_wire->half_separation, Dimension::Length);
    q("width", c.two_wire->width, Dimension::Length);
    q("thickness", c.two_wire->thickness, Dimension::Length);
    q("length", c.two_wire->length, Dimension::Length);
    out << "model = " << (c.two_wire->model == WireModel::Thin ? "thin" : "filament") << '\n';
    out << "filaments = " << c.two_wire->filaments << '\n';
  }

  out << "\n[bias]\n";
  q("x", c.bias[0], Dimension::Field);
  q("y", c.bias[1], Dimension::Field);
  q("z", c.bias[2], Dimension::Field);

  out << "\n[image]\n";
  out << "enabled = " << b(c.image.enabled) << '\n';
  q("surface", c.image.surface_height, Dimension::Length);

  out << "\n[launch]\n";
  q("x", c.launch.x, Dimension::Length);
  q("y", c.launch.y, Dimension::Length);
  q("z", c.launch.z, Dimension::Length);
  q("speed", c.launch.speed, Dimension::Speed);
  q("incidence", c.launch.incidence, Dimension::Angle);
  q("azimuth", c.launch.azimuth, Dimension::Angle);
  out << "spins = ";
  for (std::size_t i = 0; i < c.launch.spins.size(); ++i) {
    out << (i ? ", " : "") << to_string(c.launch.spins[i]);
  }
  out << '\n';

  out << "\n[window]\n";
  q("length", c.window_length, Dimension::Length);

  out << "\n[integrator]\n";
  const auto& o = c.integrator;
  q("rel_tol", o.rel_tol, Dimension::Dimensionless);
  q("abs_tol", o.abs_tol, Dimension::Dimensionless);
  q("max_step", o.max_step, Dimension::Time);
  q("min_step", o.min_step, Dimension::Time);
  q("t_max", o.t_max, Dimension::Time);
  opt("y_min", o.y_min, Dimension::Length);
  out << "record_stride = " << o.record_stride << '\n';
  out << "renormalise_spin = " << b(o.renormalise_spin) << '\n';
  out << "max_steps = " << o.max_steps << '\n';

  if (c.source) {
    out << "\n[source]\n";
    q("axial_spread", c.source->axial_spread, Dimension::Speed);
    q("divergence", c.source->divergence, Dimension::Angle);
    q("emittance", c.source->emittance_1d, Dimension::Emittance);
    out << "spin = " << to_string(c.source->spin) << '\n';
    q("spread_scale", c.source->spread_scale, Dimension::Dimensionless);
    opt("waist", c.source->waist, Dimension::Length);
  }

  out << "\n[ensemble]\n";
  out << "count = " << c.ensemble.count << '\n';
  out << "workers = " << c.ensemble.workers << '\n';
  out << "bins_vz = " << c.ensemble.bins_vz << '\n';
  out << "bins_vy = " << c.ensemble.bins_vy << '\n';
  out << "plane = " << (c.ensemble.plane == SplitPlane::Vertical ? "vertical" : "horizontal")
      << '\n';

  if (c.focus.enabled || c.focus.target != 0.0 || c.focus.tolerance != 0.0) {
    out << "\n[focus]\n";
    q("target", c.focus.target, Dimension::Length);
    q("tolerance", c.focus.tolerance, Dimension::Length);
    out << "enabled = " << b(c.focus.enabled) << '\n';
  }

  if (c.sweep) {
    out << "\n[sweep]\n";
    q("vy_min", c.sweep->vy_min, Dimension::Speed);
    q("vy_max", c.sweep->vy_max, Dimension::Speed);
    out << "points = " << c.sweep->points << '\n';
    q("floor", c.sweep->floor, Dimension::Length);
  }

  out << "\n[output]\n";
  out << "directory = " << c.output.directory << '\n';
  out << "prefix = " << c.output.prefix << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

FieldModelPtr RunConfig::field_model() const {
  std::vector<FieldModelPtr> parts;
  const Vec3 b(bias[0], bias[1], bias[2]);
  if (b.squaredNorm() > 0.0) parts.push_back(std::make_shared<UniformField>(b));
  switch (scenario) {
    case Scenario::Grating:
      parts.push_back(std::make_shared<GratingFourierField>(*grating));
      break;
    case Scenario::Multipole:
      parts.push_back(std::make_shared<WindowedField>(std::make_shared<MultipoleField>(*multipole),
                                                      0.0, window_length));
      break;
    case Scenario::TwoWire:
      parts.push_back(std::make_shared<WindowedField>(std::make_shared<TwoWireField>(*two_wire),
                                                      0.0, window_length));
      break;
  }
  return compose_fields(parts);
}

IonState RunConfig::launch_state(SpinPreparation spin) const {
  IonState s;
  s.r = Vec3(launch.x, launch.y, launch.z);
  const double th = launch.incidence, ph = launch.azimuth;
  s.v = launch.speed * Vec3(std::sin(ph), -std::sin(th) * std::cos(ph), std::cos(th) * std::cos(ph));
  s.S = prepared_spin(spin, 0);
  return s;
}

AdiabaticParams RunConfig::adiabatic_params(double Sx0) const {
  if (scenario != Scenario::Grating || !grating) {
    throw std::invalid_argument("adiabatic parameters need the grating scenario");
  }
  return AdiabaticParams::from_grating(bias[0], *grating,
                                       launch.speed * std::cos(launch.incidence), Sx0);
}

LaunchFrame RunConfig::launch_frame() const {
  return LaunchFrame{launch.y, launch.incidence, launch.x, launch.z};
}

IntegratorOptions RunConfig::integrator_options() const {
  IntegratorOptions o = integrator;
  o.z_exit = window_length;
  return o;
}

}  // namespace sgbeam
