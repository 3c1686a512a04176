#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "motorld/model.hpp"
#include "motorld/path.hpp"

namespace motorld {

struct SimulationConfig {
  double epsilon = 0.1;
  double horizon = 1.0;
  double dt_safety = 0.05;
  double dt_cap = 1e-3;
  std::uint64_t master_seed = 0;
  int path_count = 1;
  std::vector<double> initial_position;  // defaults to the origin
  int initial_state = 1;                 // 1-based
  int record_stride = 1;

  /// Throws ModelError when a field is out of range for `model`.
  void validate(const ModelDefinition& model) const;
};

/// min(dt_cap, dt_safety * epsilon / Lambda_max), Lambda_max = J * rate_sup.
double effective_dt(const ModelDefinition& model, const SimulationConfig& config);

/// Seed of the RNG stream of one path: SplitMix64 finaliser applied to
/// master_seed + (path_index + 1) * 0x9E3779B97F4A7C15.
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t path_index);

struct Trajectory {
  int dimension = 1;
  std::vector<double> times;
  std::vector<double> positions;  // row-major, `dimension` per time
  std::vector<int> states;        // 1-based
  int jump_count = 0;
  /// Largest per-step jump intensity Lambda * dt seen along the path.
  double max_step_intensity = 0.0;

  std::size_t size() const { return times.size(); }
  std::span<const double> position(std::size_t k) const {
    return {positions.data() + k * dimension, static_cast<std::size_t>(dimension)};
  }
};

/// Euler-Maruyama for the rescaled position plus a per-step switching
/// draw with probability 1 - exp(-Lambda dt), Lambda = sum_j r_ij / epsilon.
/// Throws NumericalError naming the path when the state becomes non-finite.
Trajectory simulate_path(const ModelDefinition& model, const SimulationConfig& config,
                         std::uint64_t path_index);

struct EnsembleSummary {
  int dimension = 1;
  double epsilon = 0.0;
  int path_count = 0;
  double mean_jump_count = 0.0;
  std::vector<double> times;
  std::vector<double> mean;  // row-major per time
  std::vector<double> sem;   // row-major per time
  /// Per path; empty without a reference.
  std::vector<double> sup_deviation;
  /// Per path, row-major.
  std::vector<double> final_positions;
};

/// Runs config.path_count paths on `threads` workers (0: hardware
/// concurrency). Reductions happen in path-index order, so the summary does
/// not depend on the thread count.
EnsembleSummary simulate_ensemble(const ModelDefinition& model, const SimulationConfig& config,
                                  const PathSample* reference = nullptr, int threads = 1);

/// max over the trajectory's sample times of |position - reference(t)|.
double sup_deviation(const Trajectory& trajectory, const PathSample& reference);

}  // namespace motorld
