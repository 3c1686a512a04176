#include "motorld/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "motorld/errors.hpp"

namespace motorld {

using nlohmann::json;

std::string format_number(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buffer, end);
}

namespace {

std::string axis_header(const char* prefix, int d) {
  std::string s;
  for (int k = 1; k <= d; ++k) {
    if (k > 1) s += ',';
    s += prefix + std::to_string(k);
  }
  return s;
}

json per_time(const std::vector<double>& values, int d) {
  json arr = json::array();
  if (d == 1) {
    for (double v : values) arr.push_back(v);
  } else {
    for (std::size_t k = 0; k + d <= values.size(); k += d)
      arr.push_back(std::vector<double>(values.begin() + k, values.begin() + k + d));
  }
  return arr;
}

json vector_or_scalar(const std::vector<double>& v) {
  if (v.size() == 1) return v[0];
  return v;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t," << axis_header("y", trajectory.dimension) << ",state\n";
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    out << format_number(trajectory.times[k]);
    for (double y : trajectory.position(k)) out << ',' << format_number(y);
    out << ',' << trajectory.states[k] << '\n';
  }
}

std::string summary_json(const EnsembleSummary& s) {
  json j;
  j["schema"] = "motorld.ensemble_summary/1";
  j["dimension"] = s.dimension;
  j["epsilon"] = s.epsilon;
  j["path_count"] = s.path_count;
  j["mean_jump_count"] = s.mean_jump_count;
  j["times"] = s.times;
  j["mean"] = per_time(s.mean, s.dimension);
  j["sem"] = per_time(s.sem, s.dimension);
  j["sup_deviation"] = s.sup_deviation;
  j["final_position"] = per_time(s.final_positions, s.dimension);
  return j.dump(2) + "\n";
}

void write_hamiltonian_csv(std::ostream& out, const std::vector<HamiltonianRow>& rows) {
  const int d = rows.empty() ? 1 : static_cast<int>(rows.front().x.size());
  out << axis_header("x", d) << ',' << axis_header("p", d) << ",H\n";
  for (const auto& r : rows) {
    for (double v : r.x) out << format_number(v) << ',';
    for (double v : r.p) out << format_number(v) << ',';
    out << format_number(r.h) << '\n';
  }
}

std::string hamiltonian_json(const std::vector<HamiltonianRow>& rows) {
  json j;
  j["schema"] = "motorld.hamiltonian_table/1";
  json arr = json::array();
  for (const auto& r : rows) arr.push_back({{"x", vector_or_scalar(r.x)}, {"p", vector_or_scalar(r.p)}, {"H", r.h}});
  j["rows"] = arr;
  return j.dump(2) + "\n";
}

void write_measure_csv(std::ostream& out, const CellGrid& grid, const CellMeasure& measure) {
  const int d = grid.dimension();
  out << axis_header("y", d) << ",state,weight\n";
  std::vector<double> y(d);
  for (std::size_t row = 0; row < grid.size(); ++row) {
    grid.point(grid.cell_of(row), y);
    for (double v : y) out << format_number(v) << ',';
    out << grid.state_of(row) + 1 << ',' << format_number(measure.weights[row]) << '\n';
  }
}

std::string action_report_json(const ActionReport& report) {
  json j;
  j["schema"] = "motorld.action_report/1";
  j["total_action"] = report.total_action;
  json segs = json::array();
  for (const auto& s : report.segments)
    segs.push_back({{"t0", s.t0},
                    {"t1", s.t1},
                    {"v", vector_or_scalar(s.v)},
                    {"L", s.lagrangian},
                    {"p_star", vector_or_scalar(s.p_star)}});
  j["segments"] = segs;
  j["rule"] = report.rule;
  return j.dump(2) + "\n";
}

std::string check_reports_json(const std::vector<CheckReport>& reports, bool timings) {
  json arr = json::array();
  for (const auto& r : reports) {
    json measured = json::object();
    for (const auto& [k, v] : r.measured) measured[k] = std::isfinite(v) ? json(v) : json(format_number(v));
    json j{{"name", r.name},
           {"passed", r.passed},
           {"measured", measured},
           {"tolerance", r.tolerance},
           {"context", r.context},
           {"detail", r.detail}};
    if (timings) j["wall_time"] = r.wall_time;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

PathSample parse_path_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ModelError("path CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int d = 0;
  if (line == "t,x1") d = 1;
  else if (line == "t,x1,x2") d = 2;
  else throw ModelError("path CSV header must be \"t,x1\" or \"t,x1,x2\", got \"" + line + "\"");

  PathSample path;
  path.dimension = d;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string cell = line.substr(start, comma - start);
      double v = 0.0;
      const char* b = cell.data();
      while (*b == ' ') ++b;
      auto [ptr, ec] = std::from_chars(b, cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ModelError("path CSV row " + std::to_string(row) + ": cannot parse \"" + cell + "\"");
      fields.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(fields.size()) != d + 1)
      throw ModelError("path CSV row " + std::to_string(row) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(d + 1));
    path.times.push_back(fields[0]);
    path.points.insert(path.points.end(), fields.begin() + 1, fields.end());
  }
  path.validate();
  return path;
}

PathSample read_path_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_path_csv(buffer.str());
}

void write_path_csv(std::ostream& out, const PathSample& path) {
  out << "t," << axis_header("x", path.dimension) << '\n';
  for (std::size_t k = 0; k < path.size(); ++k) {
    out << format_number(path.times[k]);
    for (double v : path.point(k)) out << ',' << format_number(v);
    out << '\n';
  }
}

void write_text_file(const std::filesystem::path& file, const std::string& content) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + file.string());
}

}  // namespace motorld
