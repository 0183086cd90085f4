#pragma once

// Closed-form feasibility estimates for the three magnet configurations.
//
// All functions take and return SI values and throw std::domain_error on
// inputs outside their stated range. The named dispatcher at the bottom
// wraps them into EstimateReport records for the command line.

#include <map>
#include <string>
#include <vector>

#include "sgbeam/constants.hpp"

namespace sgbeam {

struct LorentzBound {
  double lorentz_spread = 0.0;  // lower bound on the Lorentz force spread (N)
  double sg_force = 0.0;        // mu_B B' (N)
  double ratio = 0.0;           // (m_e / m) (p / dp_x)
  bool resolvable = false;      // ratio < 1
};

/// Uncertainty bound dF_L >= (e hbar / 2m)(p / dp_x) B' against the SG force
/// mu_B B' = (e hbar / 2 m_e) B'.
LorentzBound lorentz_uncertainty_bound(double p, double dp_x, double gradient, double mass);

/// Angular splitting mu_B B' L / (m v^2) of a quadrupole of gradient B'.
double quadrupole_splitting(double gradient, double length, double mass, double speed);

/// mu0 I / (pi d^2): gradient midway between two thin wires a distance 2d apart.
double two_wire_gradient(double current, double d);

struct VelocityKick {
  double dv = 0.0;     // transverse velocity (m/s)
  double angle = 0.0;  // dv / v (rad)
};

/// Spin splitting g mu_B dS L / (m v) * mu0 I / (pi d^2).
VelocityKick two_wire_splitting(double current, double d, double length, double mass,
                                double speed, double delta_spin = 1.0,
                                double g_factor = kElectronGFactor);

/// Lorentz broadening (L / m) e B' dy. The ion speed cancels between the
/// force e v B' dy and the flight time L / v; it only enters the angle.
VelocityKick lorentz_broadening(double length, double mass, double gradient, double waist,
                                double speed, double charge = codata::elementary_charge);

/// Waist eta / (sqrt(E) dtheta). eta in m rad sqrt(J), E in J.
double beam_waist_from_emittance(double emittance_1d, double energy, double divergence);

/// Converts an emittance quoted in nm mrad sqrt(eV) to m rad sqrt(J).
double emittance_from_nm_mrad_sqrt_ev(double value);

/// One-dimensional emittance floor hbar / sqrt(8 m) of a minimum-uncertainty beam.
double minimum_emittance_1d(double mass);

/// Total spin rotation angle along the hexapole axis: the Larmor rate of
/// B_x(0, 0, z) = (a3/3) sqrt(21/2pi) z^2 / y0^2 integrated over 0 <= z <= L
/// at speed v, i.e. (g mu_B / hbar)(1/3) sqrt(21/2pi) |a3| L^3 / (3 y0^2 v).
double hexapole_precession(double a3, double y0, double length, double speed,
                           double g_factor = kElectronGFactor);

// ---------------------------------------------------------------------------
// Named dispatch
// ---------------------------------------------------------------------------

struct Quantity {
  std::string name;
  double value = 0.0;
  std::string unit;
};

struct EstimateReport {
  std::string formula;              // dispatch name, e.g. "two-wire-splitting"
  std::vector<Quantity> inputs;     // SI values as used
  std::vector<Quantity> outputs;    // first entry is the headline value
  std::string expression;           // the closed form in words and symbols
  std::string convention;           // moment / spin convention behind it

  const Quantity& primary() const { return outputs.front(); }
  const Quantity& output(const std::string& name) const;
};

/// Formula names accepted by run_estimate, with their parameter names.
struct EstimateSignature {
  std::string name;
  std::vector<std::string> required;  // SI inputs
  std::map<std::string, double> defaults;
  std::string summary;
};

const std::vector<EstimateSignature>& estimate_catalogue();

/// Evaluates a named estimate. `inputs` holds SI values keyed by parameter
/// name; missing optional keys take the catalogue defaults. Throws
/// std::invalid_argument for an unknown name or missing / unexpected keys.
EstimateReport run_estimate(const std::string& name, const std::map<std::string, double>& inputs);

}  // namespace sgbeam
