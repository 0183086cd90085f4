#pragma once

// CSV and JSON writers. Every CSV starts with a schema line
// "# sgbeam <kind> v<version>" followed by a header row of column names;
// values are SI. JSON documents carry a "schema" member.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgbeam/adiabatic.hpp"
#include "sgbeam/config.hpp"
#include "sgbeam/dynamics.hpp"
#include "sgbeam/ensemble.hpp"
#include "sgbeam/estimators.hpp"
#include "sgbeam/run.hpp"

namespace sgbeam::io {

using nlohmann::json;

inline constexpr const char* kTrajectorySchema = "# sgbeam trajectory v1";
inline constexpr const char* kReducedSchema = "# sgbeam reduced-trajectory v1";
inline constexpr const char* kEnsembleSchema = "# sgbeam ensemble-ions v1";
inline constexpr const char* kHistogramSchema = "# sgbeam velocity-histogram v1";
inline constexpr const char* kFieldCheckSchema = "# sgbeam field-check v1";
inline constexpr const char* kSweepSchema = "# sgbeam closest-approach v1";

/// t,x,y,z,vx,vy,vz,Sx,Sy,Sz
void write_trajectory_csv(std::ostream& out, const Trajectory& tr);

/// t,z,y,vy,vz,a_lorentz,a_image,a_ponderomotive,a_stern_gerlach,a_total
void write_reduced_csv(std::ostream& out, const AdiabaticTrajectory& tr);

/// One row per ion: index,spin,status,x0,y0,z0,vx0,vy0,vz0,closest,angle,
/// x,y,z,vx,vy,vz,t,steps,energy_drift,max_adiabaticity
void write_ensemble_csv(std::ostream& out, const EnsembleResult& result);

/// spin,iz,iy,vz_lo,vz_hi,vy_lo,vy_hi,count
void write_histogram_csv(std::ostream& out, const std::vector<VelocityHistogram>& hists);

/// x,y,z,valid,Bx,By,Bz,Jxx..Jzz,div,curl_x,curl_y,curl_z,jacobian_error,
/// jacobian_norm,relative_residual
void write_field_check_csv(std::ostream& out, const std::vector<FieldCheckRow>& rows);

/// vy0,spin,closest,crashed
void write_sweep_csv(std::ostream& out, const std::vector<ApproachPoint>& points);

json state_json(const IonState& s);

/// Per-spin status, final state, diagnostics and the pairwise separations
/// of the first two runs.
json simulation_summary(const RunConfig& config, const SimulationResult& result);

/// Means, spreads, resolution ratio, crash count and seed.
json ensemble_summary(const RunConfig& config, const EnsembleResult& result);

json estimate_json(const EstimateReport& report);

/// Multi-line human-readable form of an estimate.
std::string estimate_text(const EstimateReport& report);

/// Writes `doc` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& doc);

/// Opens `path` for writing, creating parent directories. Throws
/// std::runtime_error on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace sgbeam::io
