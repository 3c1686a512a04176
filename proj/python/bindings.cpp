#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "motorld/action.hpp"
#include "motorld/errors.hpp"
#include "motorld/io.hpp"
#include "motorld/model.hpp"
#include "motorld/simulate.hpp"
#include "motorld/spectral.hpp"
#include "motorld/verify.hpp"

namespace py = pybind11;
using namespace motorld;

namespace {

py::dict report_dict(const CheckReport& r) {
  py::dict measured;
  for (const auto& [k, v] : r.measured) measured[py::str(k)] = v;
  py::dict d;
  d["name"] = r.name;
  d["passed"] = r.passed;
  d["measured"] = measured;
  d["tolerance"] = r.tolerance;
  d["context"] = r.context;
  d["detail"] = r.detail;
  return d;
}

py::dict summary_dict(const EnsembleSummary& s) {
  py::dict d;
  d["dimension"] = s.dimension;
  d["epsilon"] = s.epsilon;
  d["path_count"] = s.path_count;
  d["mean_jump_count"] = s.mean_jump_count;
  d["times"] = s.times;
  d["mean"] = s.mean;
  d["sem"] = s.sem;
  d["sup_deviation"] = s.sup_deviation;
  d["final_positions"] = s.final_positions;
  return d;
}

PathSample make_path(const std::vector<double>& times, const std::vector<std::vector<double>>& points) {
  PathSample path;
  path.dimension = points.empty() ? 1 : static_cast<int>(points.front().size());
  path.times = times;
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != path.dimension) throw ModelError("ragged path points");
    path.points.insert(path.points.end(), p.begin(), p.end());
  }
  path.validate();
  return path;
}

CellGrid grid_for(const ModelDefinition& m, int n) { return CellGrid::for_model(m, n); }

}  // namespace

PYBIND11_MODULE(_motorld, mod) {
  mod.doc() = "Switching-diffusion homogenisation and large-deviation toolkit";

  auto model_error = py::register_exception<ModelError>(mod, "ModelError", PyExc_ValueError);
  py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(mod, "IoError", PyExc_OSError);
  (void)model_error;

  py::class_<ModelDefinition>(mod, "Model")
      .def_property_readonly("name", &ModelDefinition::name)
      .def_property_readonly("dimension", &ModelDefinition::dimension)
      .def_property_readonly("states", &ModelDefinition::states)
      .def_property_readonly("period", &ModelDefinition::period)
      .def_property_readonly("slow_dependent", &ModelDefinition::slow_dependent)
      .def("drift_expression",
           [](const ModelDefinition& m, int i, int axis) { return m.drift_expression(i, axis).to_string(); })
      .def("to_json", &serialize_model);

  mod.def("builtin_model", [](const std::string& name, const std::map<std::string, double>& params) {
    return builtin_model(name, params);
  }, py::arg("name"), py::arg("params") = std::map<std::string, double>{});
  mod.def("load_model", [](const std::string& source) { return load_model(source); },
          py::arg("path_or_json"));

  mod.def("hamiltonian",
          [](const ModelDefinition& m, const std::vector<double>& x, const std::vector<double>& p, int grid) {
            return hamiltonian(m, grid_for(m, grid), x, p);
          },
          py::arg("model"), py::arg("x"), py::arg("p"), py::arg("grid") = 0);
  mod.def("hamiltonian_grad_p",
          [](const ModelDefinition& m, const std::vector<double>& x, const std::vector<double>& p, int grid) {
            return hamiltonian_grad_p(m, grid_for(m, grid), x, p);
          },
          py::arg("model"), py::arg("x"), py::arg("p"), py::arg("grid") = 0);
  mod.def("lln_velocity",
          [](const ModelDefinition& m, const std::vector<double>& x, int grid) {
            return lln_velocity(m, grid_for(m, grid), x);
          },
          py::arg("model"), py::arg("x"), py::arg("grid") = 0);
  mod.def("stationary_measure",
          [](const ModelDefinition& m, const std::vector<double>& x, int grid) {
            const CellMeasure mu = stationary_measure(m, grid_for(m, grid), x);
            return std::vector<double>(mu.weights.data(), mu.weights.data() + mu.weights.size());
          },
          py::arg("model"), py::arg("x"), py::arg("grid") = 0);
  mod.def("legendre",
          [](const ModelDefinition& m, const std::vector<double>& x, const std::vector<double>& v, int grid) {
            const LegendreResult r = legendre(m, grid_for(m, grid), x, v);
            return py::make_tuple(r.value, r.p_star);
          },
          py::arg("model"), py::arg("x"), py::arg("v"), py::arg("grid") = 0,
          "Returns (L, p_star).");
  mod.def("path_action",
          [](const ModelDefinition& m, const std::vector<double>& times,
             const std::vector<std::vector<double>>& points, int grid) {
            const ActionReport r = path_action(m, grid_for(m, grid), make_path(times, points));
            py::list segments;
            for (const auto& s : r.segments) {
              py::dict d;
              d["t0"] = s.t0;
              d["t1"] = s.t1;
              d["v"] = s.v;
              d["L"] = s.lagrangian;
              d["p_star"] = s.p_star;
              segments.append(d);
            }
            py::dict out;
            out["total_action"] = r.total_action;
            out["segments"] = segments;
            out["rule"] = r.rule;
            return out;
          },
          py::arg("model"), py::arg("times"), py::arg("points"), py::arg("grid") = 0);
  mod.def("zero_cost_path",
          [](const ModelDefinition& m, const std::vector<double>& x0, double horizon, double dt, int grid) {
            const PathSample p = zero_cost_path(m, grid_for(m, grid), x0, horizon, dt);
            return py::make_tuple(p.times, p.points);
          },
          py::arg("model"), py::arg("x0"), py::arg("horizon"), py::arg("dt") = 1e-2,
          py::arg("grid") = 0, "Returns (times, flattened points).");
  mod.def("simulate_ensemble",
          [](const ModelDefinition& m, double epsilon, double horizon, int paths, std::uint64_t seed,
             const std::vector<double>& x0, int threads) {
            SimulationConfig c;
            c.epsilon = epsilon;
            c.horizon = horizon;
            c.path_count = paths;
            c.master_seed = seed;
            c.initial_position = x0;
            py::gil_scoped_release release;
            EnsembleSummary s = simulate_ensemble(m, c, nullptr, threads);
            py::gil_scoped_acquire acquire;
            return summary_dict(s);
          },
          py::arg("model"), py::arg("epsilon"), py::arg("horizon"), py::arg("paths"),
          py::arg("seed") = 0, py::arg("x0") = std::vector<double>{}, py::arg("threads") = 1);
  mod.def("run_check_suite",
          [](const ModelDefinition& m, const std::string& suite, int grid, std::uint64_t seed) {
            py::list out;
            for (const auto& r : run_check_suite(m, grid_for(m, grid), suite, seed)) out.append(report_dict(r));
            return out;
          },
          py::arg("model"), py::arg("suite") = "all", py::arg("grid") = 0, py::arg("seed") = 20240601);
  mod.def("check_containment", [](const ModelDefinition& m) { return report_dict(check_containment(m)); },
          py::arg("model"));
}
