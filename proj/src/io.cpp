#include "sgbeam/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sgbeam::io {

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Row {
 public:
  explicit Row(std::ostream& out) : out_(out) {}
  ~Row() { out_ << '\n'; }
  Row& operator<<(double v) { return put(num(v)); }
  Row& operator<<(long v) { return put(std::to_string(v)); }
  Row& operator<<(int v) { return put(std::to_string(v)); }
  Row& operator<<(std::size_t v) { return put(std::to_string(v)); }
  Row& operator<<(const std::string& v) { return put(v); }
  Row& operator<<(const char* v) { return put(v); }

 private:
  Row& put(const std::string& s) {
    if (!first_) out_ << ',';
    first_ = false;
    out_ << s;
    return *this;
  }
  std::ostream& out_;
  bool first_ = true;
};

void vec(Row& row, const Vec3& v) { row << v.x() << v.y() << v.z(); }

// JSON has no NaN; absent values become null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  out << kTrajectorySchema << '\n';
  out << "t,x,y,z,vx,vy,vz,Sx,Sy,Sz\n";
  for (const IonState& s : tr.samples) {
    Row row(out);
    row << s.t;
    vec(row, s.r);
    vec(row, s.v);
    vec(row, s.S);
  }
}

void write_reduced_csv(std::ostream& out, const AdiabaticTrajectory& tr) {
  out << kReducedSchema << '\n';
  out << "t,z,y,vy,vz,a_lorentz,a_image,a_ponderomotive,a_stern_gerlach,a_total\n";
  for (const AdiabaticSample& s : tr.samples) {
    Row row(out);
    row << s.t << s.z << s.y << s.vy << s.vz << s.terms.lorentz << s.terms.image
        << s.terms.ponderomotive << s.terms.stern_gerlach << s.terms.total();
  }
}

void write_ensemble_csv(std::ostream& out, const EnsembleResult& result) {
  out << kEnsembleSchema << '\n';
  out << "index,spin,status,x0,y0,z0,vx0,vy0,vz0,closest,angle,x,y,z,vx,vy,vz,t,steps,"
         "energy_drift,max_adiabaticity\n";
  for (const IonRecord& r : result.records) {
    Row row(out);
    const Vec3& S = r.initial.S;
    std::string spin = "other";
    if (std::abs(S.x()) > 0.0 && S.y() == 0.0 && S.z() == 0.0) spin = S.x() > 0 ? "+x" : "-x";
    if (std::abs(S.y()) > 0.0 && S.x() == 0.0 && S.z() == 0.0) spin = S.y() > 0 ? "+y" : "-y";
    row << r.index << spin << to_string(r.status);
    vec(row, r.initial.r);
    vec(row, r.initial.v);
    row << r.closest_approach << r.angle;
    vec(row, r.final.r);
    vec(row, r.final.v);
    row << r.final.t << r.steps << r.energy_drift << r.max_adiabaticity;
  }
}

void write_histogram_csv(std::ostream& out, const std::vector<VelocityHistogram>& hists) {
  out << kHistogramSchema << '\n';
  out << "spin,iz,iy,vz_lo,vz_hi,vy_lo,vy_hi,count\n";
  for (const VelocityHistogram& h : hists) {
    const double dz = (h.vz_max - h.vz_min) / h.bins_vz;
    const double dy = (h.vy_max - h.vy_min) / h.bins_vy;
    for (int iz = 0; iz < h.bins_vz; ++iz) {
      for (int iy = 0; iy < h.bins_vy; ++iy) {
        Row row(out);
        row << h.label << iz << iy << h.vz_min + iz * dz << h.vz_min + (iz + 1) * dz
            << h.vy_min + iy * dy << h.vy_min + (iy + 1) * dy
            << h.counts[static_cast<std::size_t>(iz) * h.bins_vy + iy];
      }
    }
  }
}

void write_field_check_csv(std::ostream& out, const std::vector<FieldCheckRow>& rows) {
  out << kFieldCheckSchema << '\n';
  out << "x,y,z,valid,Bx,By,Bz,Jxx,Jxy,Jxz,Jyx,Jyy,Jyz,Jzx,Jzy,Jzz,div,curl_x,curl_y,curl_z,"
         "jacobian_error,jacobian_norm,relative_residual\n";
  for (const FieldCheckRow& f : rows) {
    Row row(out);
    vec(row, f.r);
    row << (f.valid ? 1 : 0);
    vec(row, f.sample.B);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) row << f.sample.J(i, j);
    }
    row << f.residuals.divergence;
    vec(row, f.residuals.curl);
    row << f.residuals.jacobian_error << f.residuals.jacobian_norm << f.relative_residual();
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<ApproachPoint>& points) {
  out << kSweepSchema << '\n';
  out << "vy0,spin,closest,crashed\n";
  for (const ApproachPoint& p : points) {
    Row row(out);
    row << p.vy0 << p.spin << p.closest << (p.crashed ? 1 : 0);
  }
}

json state_json(const IonState& s) {
  return json{{"t", s.t}, {"r", vec_json(s.r)}, {"v", vec_json(s.v)}, {"S", vec_json(s.S)}};
}

json simulation_summary(const RunConfig& config, const SimulationResult& result) {
  json doc;
  doc["schema"] = "sgbeam simulate-summary v1";
  doc["scenario"] = to_string(config.scenario);
  doc["engine"] = to_string(result.engine);
  json runs = json::array();
  for (const SpinRun& r : result.runs) {
    json j;
    j["spin"] = to_string(r.spin);
    j["status"] = to_string(r.status);
    j["initial"] = state_json(r.initial);
    j["final"] = state_json(r.final);
    j["closest_approach"] = r.closest_approach;
    j["vertical_angle"] = vertical_angle(r.final.v);
    j["horizontal_angle"] = horizontal_angle(r.final.v);
    if (r.full) {
      const TrajectoryDiagnostics& d = r.full->diagnostics;
      j["diagnostics"] = {{"initial_energy", d.initial_energy},
                          {"final_energy", d.final_energy},
                          {"energy_drift", d.energy_drift},
                          {"max_spin_norm_drift", d.max_spin_norm_drift},
                          {"max_x_excursion", d.max_x_excursion},
                          {"accepted_steps", d.accepted_steps},
                          {"rejected_steps", d.rejected_steps},
                          {"message", d.message}};
    }
    if (r.adiabatic) {
      j["diagnostics"] = {{"max_adiabaticity", r.adiabatic->max_adiabaticity},
                          {"adiabaticity_violated", r.adiabatic->adiabaticity_violated},
                          {"accepted_steps", r.adiabatic->accepted_steps},
                          {"message", r.adiabatic->message}};
    }
    runs.push_back(std::move(j));
  }
  doc["runs"] = std::move(runs);
  if (result.runs.size() >= 2) {
    const IonState& a = result.runs[0].final;
    const IonState& b = result.runs[1].final;
    doc["separation"] = {
        {"vertical_angle", std::abs(vertical_angle(a.v) - vertical_angle(b.v))},
        {"horizontal_angle", std::abs(horizontal_angle(a.v) - horizontal_angle(b.v))},
        {"final_distance", (a.r - b.r).norm()},
        {"delta_vy", std::abs(a.v.y() - b.v.y())}};
  }
  return doc;
}

json ensemble_summary(const RunConfig& config, const EnsembleResult& result) {
  json doc;
  doc["schema"] = "sgbeam ensemble-summary v1";
  doc["scenario"] = to_string(config.scenario);
  doc["engine"] = to_string(result.engine);
  doc["seed"] = result.seed;
  doc["count"] = result.records.size();
  doc["crashed"] = result.crashed;
  doc["focused"] = config.focus.enabled;
  if (config.focus.enabled) {
    std::size_t inside = 0;
    for (const IonRecord& r : result.records) {
      if (std::abs(r.closest_approach - config.focus.target) <= config.focus.tolerance) ++inside;
    }
    doc["focus"] = {{"target", config.focus.target},
                    {"tolerance", config.focus.tolerance},
                    {"inside_band", inside},
                    {"fraction_inside",
                     static_cast<double>(inside) / static_cast<double>(result.records.size())}};
  }
  doc["plane"] = config.ensemble.plane == SplitPlane::Vertical ? "vertical" : "horizontal";
  doc["resolution_ratio"] = number_or_null(result.resolution_ratio);
  json spins = json::array();
  for (const SpinSummary& s : result.spins) {
    spins.push_back({{"label", s.label},
                     {"count", s.count},
                     {"crashed", s.crashed},
                     {"failed", s.failed},
                     {"mean_angle", number_or_null(s.mean_angle)},
                     {"angle_spread", number_or_null(s.angle_spread)},
                     {"mean_vy", number_or_null(s.mean_vy)},
                     {"spread_vy", number_or_null(s.spread_vy)},
                     {"mean_vz", number_or_null(s.mean_vz)},
                     {"spread_vz", number_or_null(s.spread_vz)},
                     {"mean_closest", number_or_null(s.mean_closest)},
                     {"spread_closest", number_or_null(s.spread_closest)}});
  }
  doc["spins"] = std::move(spins);
  return doc;
}

json estimate_json(const EstimateReport& r) {
  auto quantities = [](const std::vector<Quantity>& qs) {
    json arr = json::array();
    for (const Quantity& q : qs) arr.push_back({{"name", q.name}, {"value", q.value}, {"unit", q.unit}});
    return arr;
  };
  return json{{"schema", "sgbeam estimate v1"},
              {"formula", r.formula},
              {"inputs", quantities(r.inputs)},
              {"outputs", quantities(r.outputs)},
              {"expression", r.expression},
              {"convention", r.convention}};
}

std::string estimate_text(const EstimateReport& r) {
  std::ostringstream out;
  out << r.formula << '\n';
  out << "  " << r.expression << '\n';
  if (!r.convention.empty()) out << "  convention: " << r.convention << '\n';
  auto line = [&](const Quantity& q) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", q.value);
    out << "  " << q.name << " = " << buf;
    if (!q.unit.empty() && q.unit != "1") out << ' ' << q.unit;
    out << '\n';
  };
  out << "inputs:\n";
  for (const Quantity& q : r.inputs) line(q);
  out << "outputs:\n";
  for (const Quantity& q : r.outputs) line(q);
  return out.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out = open_output(path);
  out << doc.dump(2) << '\n';
}

}  // namespace sgbeam::io
