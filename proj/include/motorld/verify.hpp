#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "motorld/report.hpp"
#include "motorld/simulate.hpp"
#include "motorld/spectral.hpp"

namespace motorld {

/// Property checks of the cell eigenproblem and the Lagrangian at sampled
/// x in {-2, -1, 0, 1, 2}^d. Suites: "hamiltonian", "measure", "action",
/// "all" (the three plus containment). Checks that need a small matrix
/// (dense oracle n <= 512, Donsker-Varadhan n <= 128) run on the grid
/// halved until it fits; the report context records the size used.
/// Failures are reports, never exceptions; ModelError for an unknown suite.
std::vector<CheckReport> run_check_suite(const ModelDefinition& model, const CellGrid& grid,
                                         std::string_view suite, std::uint64_t seed = 20240601);

/// sup of V_{x, grad Y(x)} with Y(x) = log(1 + |x|^2) / 2 over a log-spaced
/// slow grid |x| in [0, 1e6] and the fast validation grid. Passes when the
/// sup is finite and the tail |x| >= 1e3 exceeds the bulk by at most 1e-3.
CheckReport check_containment(const ModelDefinition& model);

struct LlnResult {
  CheckReport report;
  PathSample reference;
  std::vector<EnsembleSummary> ensembles;  // in the order of `epsilons`
  /// Fraction of paths at the smallest epsilon whose final displacement has
  /// the sign of the reference displacement (first coordinate); NaN when
  /// the reference does not move.
  double sign_agreement = 0.0;
};

/// Ensembles at each epsilon against the zero-cost path from the origin.
/// Passes when the mean sup-deviation strictly decreases with epsilon and
/// the mean final displacement at the smallest epsilon lies within
/// 3 SEM + 0.05 of the reference displacement.
LlnResult lln_experiment(const ModelDefinition& model, const CellGrid& grid,
                         std::vector<double> epsilons = {0.1, 0.05, 0.02}, int path_count = 200,
                         double horizon = 5.0, std::uint64_t seed = 1, int threads = 1);

/// fig2 model at epsilon 0.5, 0.1, 0.02 (one path each, T = 20) and a
/// 100-path ensemble at 0.02 (T = 5). Writes trajectory_eps<e>.csv,
/// ensemble_summary.json and stationary_measure.csv into `out_dir`; passes
/// when >= 90% of the ensemble's final displacements share the sign of v*.
CheckReport fig2_experiment(const std::filesystem::path& out_dir, std::uint64_t seed = 1,
                            int threads = 1, int grid_points = 128);

}  // namespace motorld
