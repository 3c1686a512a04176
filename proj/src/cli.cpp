#include "motorld/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "motorld/action.hpp"
#include "motorld/errors.hpp"
#include "motorld/io.hpp"
#include "motorld/simulate.hpp"
#include "motorld/spectral.hpp"
#include "motorld/verify.hpp"

namespace motorld {

namespace {

struct ModelSource {
  std::string file;
  std::string builtin;
  std::vector<std::string> params;
  int grid = 0;
};

struct Options {
  ModelSource model;
  double epsilon = 0.1;
  int paths = 1;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::string x;
  double p_min = -2.0;
  double p_max = 2.0;
  int p_steps = 41;
  double dt = 1e-3;
  int state = 1;
  int stride = 10;
  int trajectories = 5;
  std::string reference = "none";
  std::string out;
  std::string format;
  std::string path;
  std::string suite = "all";
  std::string data_dir;
  bool timings = false;
};

void add_model_options(CLI::App* app, ModelSource& m) {
  auto* file = app->add_option("--model", m.file, "Model JSON file");
  auto* builtin = app->add_option("--builtin", m.builtin, "Builtin model: free, gradient, fig2");
  file->excludes(builtin);
  app->add_option("--param", m.params, "Model parameter NAME=VALUE (repeatable)");
  app->add_option("--grid", m.grid, "Cell grid points per axis (default 128 in 1-d, 32 in 2-d)")
      ->check(CLI::Range(3, 4096));
}

ModelDefinition resolve_model(const ModelSource& m) {
  if (m.file.empty() == m.builtin.empty())
    throw ModelError("exactly one of --model FILE or --builtin NAME is required");
  std::map<std::string, double> params;
  for (const auto& kv : m.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ModelError("--param expects NAME=VALUE, got \"" + kv + "\"");
    try {
      std::size_t used = 0;
      const std::string value = kv.substr(eq + 1);
      params[kv.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw ModelError("--param value is not a number in \"" + kv + "\"");
    }
  }
  if (!m.builtin.empty()) return builtin_model(m.builtin, params);
  if (!params.empty()) {
    std::ifstream in(m.file);
    if (!in) throw IoError("cannot read " + m.file);
    std::stringstream text;
    text << in.rdbuf();
    std::string doc = text.str();
    return load_model(substitute_params(doc, params));
  }
  return load_model(m.file);
}

std::vector<double> parse_point(const std::string& text, int d, const char* flag) {
  std::vector<double> v;
  if (text.empty()) return std::vector<double>(d, 0.0);
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw ModelError(std::string(flag) + " expects comma-separated numbers, got \"" + text + "\"");
    }
    if (!std::isfinite(v.back())) throw ModelError(std::string(flag) + " must be finite");
  }
  if (static_cast<int>(v.size()) != d)
    throw ModelError(std::string(flag) + " needs " + std::to_string(d) + " component(s)");
  return v;
}

int thread_count() {
  const char* env = std::getenv("MOTORLD_THREADS");
  if (!env || !*env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

void emit(const std::string& file, const std::string& content, std::ostream& out) {
  if (file.empty() || file == "-") out << content;
  else write_text_file(file, content);
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelDefinition model = resolve_model(o.model);
  if (o.out.empty()) throw ModelError("simulate needs --out DIR");
  if (o.reference != "none" && o.reference != "lln")
    throw ModelError("--reference must be none or lln");
  SimulationConfig c;
  c.epsilon = o.epsilon;
  c.horizon = o.horizon;
  c.dt_cap = o.dt;
  c.master_seed = o.seed;
  c.path_count = o.paths;
  c.initial_position = parse_point(o.x, model.dimension(), "--x");
  c.initial_state = o.state;
  c.record_stride = o.stride;
  c.validate(model);

  std::optional<PathSample> reference;
  if (o.reference == "lln") {
    CellSolver solver(model, CellGrid::for_model(model, o.model.grid));
    reference = zero_cost_path(solver, c.initial_position, c.horizon, 1e-2);
  }
  const std::filesystem::path dir(o.out);
  const int written = std::min(o.trajectories, o.paths);
  for (int k = 0; k < written; ++k) {
    std::ostringstream csv;
    write_trajectory_csv(csv, simulate_path(model, c, static_cast<std::uint64_t>(k)));
    write_text_file(dir / ("trajectory_" + std::to_string(k) + ".csv"), csv.str());
  }
  const EnsembleSummary summary =
      simulate_ensemble(model, c, reference ? &*reference : nullptr, thread_count());
  write_text_file(dir / "summary.json", summary_json(summary));
  if (reference) {
    std::ostringstream csv;
    write_path_csv(csv, *reference);
    write_text_file(dir / "reference.csv", csv.str());
  }
  err << "simulate: " << o.paths << " path(s), dt = " << format_number(o.horizon / std::ceil(o.horizon / effective_dt(model, c) - 1e-9))
      << ", mean jumps " << format_number(summary.mean_jump_count) << ", wrote " << dir.string() << "\n";
  (void)out;
  return 0;
}

int cmd_hamiltonian(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelDefinition model = resolve_model(o.model);
  const int d = model.dimension();
  const auto x = parse_point(o.x, d, "--x");
  if (!(o.p_max >= o.p_min)) throw ModelError("--p-max must not be below --p-min");
  if (o.p_steps < 1 || (o.p_steps == 1 && o.p_max != o.p_min))
    throw ModelError("--p-steps must be at least 2 for a non-degenerate range");
  std::vector<double> ps;
  for (int k = 0; k < o.p_steps; ++k)
    ps.push_back(o.p_steps == 1 ? o.p_min
                                : o.p_min + (o.p_max - o.p_min) * k / (o.p_steps - 1.0));
  CellSolver solver(model, CellGrid::for_model(model, o.model.grid));
  std::vector<HamiltonianRow> rows;
  for (double p1 : ps) {
    if (d == 1) {
      rows.push_back({x, {p1}, solver.hamiltonian(x, std::vector<double>{p1})});
    } else {
      for (double p2 : ps) rows.push_back({x, {p1, p2}, solver.hamiltonian(x, std::vector<double>{p1, p2})});
    }
  }
  const std::string format = o.format.empty() ? "csv" : o.format;
  if (format == "json") {
    emit(o.out, hamiltonian_json(rows), out);
  } else {
    std::ostringstream csv;
    write_hamiltonian_csv(csv, rows);
    emit(o.out, csv.str(), out);
  }
  err << "hamiltonian: " << rows.size() << " row(s) on N = " << solver.grid().points_per_axis() << "\n";
  return 0;
}

int cmd_velocity(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelDefinition model = resolve_model(o.model);
  const int d = model.dimension();
  const auto x = parse_point(o.x, d, "--x");
  CellSolver solver(model, CellGrid::for_model(model, o.model.grid));
  const auto v = solver.lln_velocity(x);
  if (o.format == "json") {
    std::ostringstream s;
    s << "{\"schema\": \"motorld.velocity/1\", \"x\": [";
    for (int c = 0; c < d; ++c) s << (c ? ", " : "") << format_number(x[c]);
    s << "], \"velocity\": [";
    for (int c = 0; c < d; ++c) s << (c ? ", " : "") << format_number(v[c]);
    s << "]}\n";
    out << s.str();
  } else {
    for (int c = 1; c <= d; ++c) out << "x" << c << ',';
    for (int c = 1; c <= d; ++c) out << "v" << c << (c < d ? "," : "\n");
    for (int c = 0; c < d; ++c) out << format_number(x[c]) << ',';
    for (int c = 0; c < d; ++c) out << format_number(v[c]) << (c + 1 < d ? "," : "\n");
  }
  if (!o.out.empty()) {
    std::ostringstream csv;
    write_measure_csv(csv, solver.grid(), solver.stationary_measure(x));
    write_text_file(o.out, csv.str());
    err << "velocity: stationary measure written to " << o.out << "\n";
  }
  return 0;
}

int cmd_action(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelDefinition model = resolve_model(o.model);
  if (o.path.empty()) throw ModelError("action needs --path FILE");
  const PathSample path = read_path_csv(o.path);
  const ActionReport report = path_action(model, CellGrid::for_model(model, o.model.grid), path);
  emit(o.out, action_report_json(report), out);
  err << "action: I = " << format_number(report.total_action) << " over "
      << report.segments.size() << " segment(s)\n";
  return 0;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<CheckReport> reports;
  if (o.suite == "fig2") {
    if (o.data_dir.empty()) throw ModelError("verify --suite fig2 needs --data-dir DIR");
    reports.push_back(fig2_experiment(o.data_dir, o.seed, thread_count(), o.model.grid > 0 ? o.model.grid : 128));
  } else {
    const ModelDefinition model = resolve_model(o.model);
    const CellGrid grid = CellGrid::for_model(model, o.model.grid);
    if (o.suite == "containment") {
      reports.push_back(check_containment(model));
    } else if (o.suite == "lln") {
      std::vector<double> eps{0.1, 0.05, 0.02};
      LlnResult result = lln_experiment(model, grid, eps, o.paths, o.horizon, o.seed, thread_count());
      reports.push_back(result.report);
      if (!o.data_dir.empty()) {
        std::ostringstream csv;
        write_path_csv(csv, result.reference);
        write_text_file(std::filesystem::path(o.data_dir) / "reference.csv", csv.str());
        for (std::size_t k = 0; k < eps.size(); ++k)
          write_text_file(std::filesystem::path(o.data_dir) /
                              ("summary_eps" + format_number(eps[k]) + ".json"),
                          summary_json(result.ensembles[k]));
      }
    } else {
      reports = run_check_suite(model, grid, o.suite, o.seed);
    }
  }
  emit(o.out, check_reports_json(reports, o.timings), out);
  int failed = 0;
  for (const auto& r : reports) {
    if (!r.passed) {
      ++failed;
      err << "FAIL " << r.name << ": " << r.detail << "\n";
    }
  }
  err << "verify: " << reports.size() - failed << "/" << reports.size() << " check(s) passed\n";
  return failed == 0 ? 0 : 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Switching-diffusion homogenisation and large-deviation toolkit", "motorld"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Simulate sample paths and an ensemble summary");
  add_model_options(sim, o.model);
  sim->add_option("--epsilon", o.epsilon, "Scale parameter")->check(CLI::PositiveNumber);
  sim->add_option("--paths", o.paths, "Number of paths")->check(CLI::Range(1, 1000000));
  sim->add_option("--horizon", o.horizon, "Final time")->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed, "Master seed");
  sim->add_option("--dt", o.dt, "Upper bound on the time step")->check(CLI::Range(1e-9, 1.0));
  sim->add_option("--x", o.x, "Initial position (comma-separated)");
  sim->add_option("--state", o.state, "Initial state (1-based)");
  sim->add_option("--stride", o.stride, "Record every k-th step")->check(CLI::Range(1, 100000000));
  sim->add_option("--trajectories", o.trajectories, "Trajectory CSVs to write")->check(CLI::Range(0, 1000));
  sim->add_option("--reference", o.reference, "Reference for sup-deviation: none or lln");
  sim->add_option("--out", o.out, "Output directory")->required();

  auto* ham = app.add_subcommand("hamiltonian", "Tabulate H(x, p) over a momentum grid");
  add_model_options(ham, o.model);
  ham->add_option("--x", o.x, "Slow position (comma-separated)");
  ham->add_option("--p-min", o.p_min, "Smallest momentum");
  ham->add_option("--p-max", o.p_max, "Largest momentum");
  ham->add_option("--p-steps", o.p_steps, "Momenta per axis")->check(CLI::Range(1, 100000));
  ham->add_option("--out", o.out, "Output file (default stdout)");
  ham->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* vel = app.add_subcommand("velocity", "Law-of-large-numbers velocity and stationary measure");
  add_model_options(vel, o.model);
  vel->add_option("--x", o.x, "Slow position (comma-separated)");
  vel->add_option("--out", o.out, "Stationary measure CSV file");
  vel->add_option("--format", o.format, "Velocity output: csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* act = app.add_subcommand("action", "Rate functional of a piecewise-linear path");
  add_model_options(act, o.model);
  act->add_option("--path", o.path, "Path CSV with header t,x1[,x2]")->required();
  act->add_option("--out", o.out, "Report JSON file (default stdout)");
  act->add_option("--format", o.format, "json")->check(CLI::IsMember({"json"}));

  auto* ver = app.add_subcommand("verify", "Run property checks and experiments");
  add_model_options(ver, o.model);
  ver->add_option("--suite", o.suite, "hamiltonian, measure, action, all, containment, lln or fig2")
      ->check(CLI::IsMember({"hamiltonian", "measure", "action", "all", "containment", "lln", "fig2"}));
  ver->add_option("--seed", o.seed, "Seed for sampled points and simulations");
  ver->add_option("--paths", o.paths, "Paths per epsilon (lln)")->check(CLI::Range(2, 1000000));
  ver->add_option("--horizon", o.horizon, "Horizon (lln)")->check(CLI::PositiveNumber);
  ver->add_option("--data-dir", o.data_dir, "Directory for experiment data files");
  ver->add_option("--out", o.out, "Report JSON file (default stdout)");
  ver->add_flag("--timings", o.timings, "Include wall times in the report");
  ver->add_option("--format", o.format, "json")->check(CLI::IsMember({"json"}));
  ver->callback([&] {
    if (ver->count("--paths") == 0) o.paths = 200;
    if (ver->count("--horizon") == 0) o.horizon = 5.0;
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (!app.get_subcommands().empty() && e.get_exit_code() == 0) {
      out << app.get_subcommands().front()->help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, out, err);
    if (ham->parsed()) return cmd_hamiltonian(o, out, err);
    if (vel->parsed()) return cmd_velocity(o, out, err);
    if (act->parsed()) return cmd_action(o, out, err);
    return cmd_verify(o, out, err);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const ModelError& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace motorld
