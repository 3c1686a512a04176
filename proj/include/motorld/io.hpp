#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "motorld/action.hpp"
#include "motorld/report.hpp"
#include "motorld/simulate.hpp"
#include "motorld/spectral.hpp"

namespace motorld {

/// Shortest decimal form that reads back to the same double.
std::string format_number(double value);

/// Header "t,y1[,y2],state".
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
/// {schema, epsilon, path_count, mean_jump_count, times, mean, sem,
/// sup_deviation, final_position}; mean and sem are per time, one entry
/// (or a [y1, y2] pair in 2-d) each.
std::string summary_json(const EnsembleSummary& summary);

struct HamiltonianRow {
  std::vector<double> x;
  std::vector<double> p;
  double h = 0.0;
};
/// Header "x1[,x2],p1[,p2],H".
void write_hamiltonian_csv(std::ostream& out, const std::vector<HamiltonianRow>& rows);
std::string hamiltonian_json(const std::vector<HamiltonianRow>& rows);

/// Header "y1[,y2],state,weight"; one row per grid cell and state.
void write_measure_csv(std::ostream& out, const CellGrid& grid, const CellMeasure& measure);

/// {total_action, segments: [{t0, t1, v, L, p_star}], rule}.
std::string action_report_json(const ActionReport& report);

/// JSON array of reports; wall_time is included only when `timings` is set
/// so that reruns produce identical files.
std::string check_reports_json(const std::vector<CheckReport>& reports, bool timings = false);

/// Path CSV with header "t,x1[,x2]". Throws IoError when unreadable and
/// ModelError when malformed.
PathSample read_path_csv(const std::filesystem::path& file);
PathSample parse_path_csv(const std::string& text);
void write_path_csv(std::ostream& out, const PathSample& path);

/// Writes `content` to `file`, creating parent directories; IoError on failure.
void write_text_file(const std::filesystem::path& file, const std::string& content);

}  // namespace motorld
