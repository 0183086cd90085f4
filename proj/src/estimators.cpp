#include "sgbeam/estimators.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

namespace sgbeam {

namespace {

constexpr double kPi = codata::pi;

void require_positive(const char* who, std::initializer_list<double> values) {
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::domain_error(std::string(who) + ": inputs must be positive and finite");
    }
  }
}

void require_non_negative(const char* who, double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw std::domain_error(std::string(who) + ": input must be non-negative and finite");
  }
}

}  // namespace

LorentzBound lorentz_uncertainty_bound(double p, double dp_x, double gradient, double mass) {
  require_positive("lorentz_uncertainty_bound", {p, dp_x, mass});
  require_non_negative("lorentz_uncertainty_bound", gradient);
  LorentzBound out;
  const double e = codata::elementary_charge;
  out.lorentz_spread = e * codata::reduced_planck / (2.0 * mass) * (p / dp_x) * gradient;
  out.sg_force = codata::bohr_magneton * gradient;
  out.ratio = (codata::electron_mass / mass) * (p / dp_x);
  out.resolvable = out.ratio < 1.0;
  return out;
}

double quadrupole_splitting(double gradient, double length, double mass, double speed) {
  require_positive("quadrupole_splitting", {gradient, length, mass, speed});
  return codata::bohr_magneton * gradient * length / (mass * speed * speed);
}

double two_wire_gradient(double current, double d) {
  require_positive("two_wire_gradient", {d});
  require_non_negative("two_wire_gradient", current);
  return codata::vacuum_permeability * current / (kPi * d * d);
}

VelocityKick two_wire_splitting(double current, double d, double length, double mass,
                                double speed, double delta_spin, double g_factor) {
  require_positive("two_wire_splitting", {current, d, length, mass, speed, g_factor});
  require_non_negative("two_wire_splitting", delta_spin);
  VelocityKick k;
  k.dv = g_factor * codata::bohr_magneton * delta_spin * length / (mass * speed) *
         two_wire_gradient(current, d);
  k.angle = k.dv / speed;
  return k;
}

VelocityKick lorentz_broadening(double length, double mass, double gradient, double waist,
                                double speed, double charge) {
  require_positive("lorentz_broadening", {length, mass, gradient, speed, charge});
  require_non_negative("lorentz_broadening", waist);
  VelocityKick k;
  k.dv = length / mass * charge * gradient * waist;
  k.angle = k.dv / speed;
  return k;
}

double beam_waist_from_emittance(double emittance_1d, double energy, double divergence) {
  require_positive("beam_waist_from_emittance", {emittance_1d, energy, divergence});
  return emittance_1d / (std::sqrt(energy) * divergence);
}

double emittance_from_nm_mrad_sqrt_ev(double value) {
  return value * 1e-9 * 1e-3 * std::sqrt(codata::elementary_charge);
}

double minimum_emittance_1d(double mass) {
  require_positive("minimum_emittance_1d", {mass});
  return codata::reduced_planck / std::sqrt(8.0 * mass);
}

double hexapole_precession(double a3, double y0, double length, double speed, double g_factor) {
  require_positive("hexapole_precession", {y0, speed});
  require_non_negative("hexapole_precession", length);
  const double gamma = g_factor * codata::bohr_magneton / codata::reduced_planck;
  return gamma * std::sqrt(21.0 / (2.0 * kPi)) / 3.0 * std::abs(a3) * length * length * length /
         (3.0 * y0 * y0 * speed);
}

// ---------------------------------------------------------------------------

const Quantity& EstimateReport::output(const std::string& name) const {
  for (const auto& q : outputs) {
    if (q.name == name) return q;
  }
  throw std::out_of_range("EstimateReport: no output named " + name);
}

namespace {

using Inputs = std::map<std::string, double>;

struct Entry {
  EstimateSignature sig;
  std::function<EstimateReport(const Inputs&)> eval;
};

const std::map<std::string, std::string>& input_units() {
  static const std::map<std::string, std::string> u = {
      {"p", "kg m/s"},   {"dp_x", "kg m/s"}, {"gradient", "T/m"}, {"mass", "kg"},
      {"length", "m"},   {"speed", "m/s"},   {"current", "A"},    {"d", "m"},
      {"delta_spin", "1"}, {"g", "1"},       {"waist", "m"},      {"emittance", "m rad J^1/2"},
      {"energy", "J"},   {"divergence", "rad"}, {"a3", "T"},      {"y0", "m"},
      {"height", "m"},
  };
  return u;
}

std::vector<Quantity> echo(const Inputs& in) {
  std::vector<Quantity> out;
  for (const auto& [k, v] : in) {
    const auto it = input_units().find(k);
    out.push_back({k, v, it == input_units().end() ? "" : it->second});
  }
  return out;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back({{"lorentz-bound",
                  {"p", "dp_x", "gradient"},
                  {{"mass", kCalcium40Mass}},
                  "uncertainty bound on the Lorentz force spread vs the SG force"},
                 [](const Inputs& in) {
                   const auto b = lorentz_uncertainty_bound(in.at("p"), in.at("dp_x"),
                                                            in.at("gradient"), in.at("mass"));
                   EstimateReport r;
                   r.outputs = {{"ratio", b.ratio, "1"},
                                {"lorentz_spread", b.lorentz_spread, "N"},
                                {"sg_force", b.sg_force, "N"},
                                {"resolvable", b.resolvable ? 1.0 : 0.0, "bool"}};
                   r.expression = "dF_L >= (e hbar/2m)(p/dp_x) B'; ratio = (m_e/m)(p/dp_x)";
                   r.convention = "F_SG = mu_B B' (moment e hbar / 2 m_e)";
                   return r;
                 }});
    t.push_back({{"quadrupole-splitting",
                  {"gradient", "length", "speed"},
                  {{"mass", kCalcium40Mass}},
                  "angular splitting of a quadrupole section"},
                 [](const Inputs& in) {
                   EstimateReport r;
                   r.outputs = {{"angle", quadrupole_splitting(in.at("gradient"), in.at("length"),
                                                               in.at("mass"), in.at("speed")),
                                 "rad"}};
                   r.expression = "dtheta = mu B' L / (m v^2)";
                   r.convention = "mu = mu_B";
                   return r;
                 }});
    t.push_back({{"two-wire-gradient", {"current", "d"}, {}, "gradient between two thin wires"},
                 [](const Inputs& in) {
                   EstimateReport r;
                   r.outputs = {{"gradient", two_wire_gradient(in.at("current"), in.at("d")),
                                 "T/m"}};
                   r.expression = "B' = mu0 I / (pi d^2)";
                   r.convention = "thin wires, equal co-directed currents, beam midway";
                   return r;
                 }});
    t.push_back({{"two-wire-splitting",
                  {"current", "d", "length", "speed"},
                  {{"mass", kCalcium40Mass}, {"delta_spin", 1.0}, {"g", kElectronGFactor}},
                  "spin splitting after a two-wire section"},
                 [](const Inputs& in) {
                   const auto k = two_wire_splitting(in.at("current"), in.at("d"),
                                                     in.at("length"), in.at("mass"),
                                                     in.at("speed"), in.at("delta_spin"),
                                                     in.at("g"));
                   EstimateReport r;
                   r.outputs = {{"angle", k.angle, "rad"}, {"dv", k.dv, "m/s"}};
                   r.expression = "dv = g mu_B dS L/(m v) * mu0 I/(pi d^2); angle = dv/v";
                   r.convention = "moment g_e mu_B dS with dS = 1";
                   return r;
                 }});
    t.push_back({{"lorentz-broadening",
                  {"length", "gradient", "waist", "speed"},
                  {{"mass", kCalcium40Mass}},
                  "velocity spread from the inhomogeneous Lorentz force"},
                 [](const Inputs& in) {
                   const auto k = lorentz_broadening(in.at("length"), in.at("mass"),
                                                     in.at("gradient"), in.at("waist"),
                                                     in.at("speed"));
                   EstimateReport r;
                   r.outputs = {{"angle", k.angle, "rad"}, {"dv", k.dv, "m/s"}};
                   r.expression = "dv = (L/m) e B' dy; angle = dv/v";
                   r.convention = "v cancels between force e v B' dy and flight time L/v";
                   return r;
                 }});
    t.push_back({{"beam-waist",
                  {"emittance", "energy", "divergence"},
                  {},
                  "beam waist from 1D emittance, energy and divergence"},
                 [](const Inputs& in) {
                   EstimateReport r;
                   r.outputs = {{"waist",
                                 beam_waist_from_emittance(in.at("emittance"), in.at("energy"),
                                                           in.at("divergence")),
                                 "m"}};
                   r.expression = "dy = eta / (sqrt(E) dtheta)";
                   r.convention = "eta is the 1D emittance, the square root of the 2D value";
                   return r;
                 }});
    t.push_back({{"hexapole-precession",
                  {"a3", "y0", "length", "speed"},
                  {{"g", kElectronGFactor}},
                  "spin rotation along the hexapole axis"},
                 [](const Inputs& in) {
                   const double phi = hexapole_precession(in.at("a3"), in.at("y0"),
                                                          in.at("length"), in.at("speed"),
                                                          in.at("g"));
                   EstimateReport r;
                   r.outputs = {{"angle", phi, "rad"}, {"rotations", phi / (2.0 * kPi), "1"}};
                   r.expression = "(g mu_B/hbar)(1/3) sqrt(21/2pi) |a3| L^3 / (3 y0^2 v)";
                   r.convention = "Larmor rate g_e mu_B |B_x| / hbar on the axis";
                   return r;
                 }});
    t.push_back({{"crash-bias",
                  {"speed", "height"},
                  {},
                  "bias at which the Lorentz push balances the image attraction"},
                 [](const Inputs& in) {
                   const double y = in.at("height"), v = in.at("speed");
                   require_positive("crash-bias", {y, v});
                   EstimateReport r;
                   r.outputs = {{"bias", codata::elementary_charge /
                                             (16.0 * kPi * codata::vacuum_permittivity * y * y * v),
                                 "T"}};
                   r.expression = "B0 = e / (16 pi eps0 y^2 v_z)";
                   r.convention = "single charge e, conducting plane at y = 0";
                   return r;
                 }});
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<EstimateSignature>& estimate_catalogue() {
  static const std::vector<EstimateSignature> sigs = [] {
    std::vector<EstimateSignature> s;
    for (const auto& e : entries()) s.push_back(e.sig);
    return s;
  }();
  return sigs;
}

EstimateReport run_estimate(const std::string& name, const Inputs& inputs) {
  for (const auto& e : entries()) {
    if (e.sig.name != name) continue;
    Inputs full = e.sig.defaults;
    std::set<std::string> allowed(e.sig.required.begin(), e.sig.required.end());
    for (const auto& [k, _] : e.sig.defaults) allowed.insert(k);
    for (const auto& [k, v] : inputs) {
      if (!allowed.count(k)) {
        throw std::invalid_argument("estimate " + name + ": unexpected parameter '" + k + "'");
      }
      full[k] = v;
    }
    for (const auto& k : e.sig.required) {
      if (!inputs.count(k)) {
        throw std::invalid_argument("estimate " + name + ": missing parameter '" + k + "'");
      }
    }
    EstimateReport r = e.eval(full);
    r.formula = name;
    r.inputs = echo(full);
    for (const auto& q : r.outputs) {
      if (!std::isfinite(q.value)) {
        throw std::domain_error("estimate " + name + ": non-finite result");
      }
    }
    return r;
  }
  throw std::invalid_argument("unknown estimate '" + name + "'");
}

}  // namespace sgbeam
