#include "motorld/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <thread>

#include "motorld/errors.hpp"

namespace motorld {

void PathSample::validate() const {
  if (dimension != 1 && dimension != 2) throw ModelError("path dimension must be 1 or 2");
  if (times.empty()) throw ModelError("path has no samples");
  if (points.size() != times.size() * static_cast<std::size_t>(dimension))
    throw ModelError("path has " + std::to_string(times.size()) + " times but " +
                     std::to_string(points.size()) + " coordinates");
  if (times.front() != 0.0) throw ModelError("path must start at t = 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw ModelError("path times must increase strictly (row " + std::to_string(k) + ")");
  for (double v : points)
    if (!std::isfinite(v)) throw ModelError("path contains a non-finite point");
}

void PathSample::interpolate(double t, std::span<double> out) const {
  constexpr double kSlack = 1e-12;
  if (times.empty() || t < times.front() - kSlack || t > times.back() + kSlack * (1 + t))
    throw ModelError("reference path does not cover t = " + std::to_string(t));
  const std::size_t n = times.size();
  if (n == 1 || t <= times.front()) {
    for (int k = 0; k < dimension; ++k) out[k] = points[k];
    return;
  }
  if (t >= times.back()) {
    for (int k = 0; k < dimension; ++k) out[k] = points[(n - 1) * dimension + k];
    return;
  }
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  for (int k = 0; k < dimension; ++k)
    out[k] = (1 - w) * points[lo * dimension + k] + w * points[hi * dimension + k];
}

void SimulationConfig::validate(const ModelDefinition& model) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ModelError("epsilon must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ModelError("horizon must be positive");
  if (!(dt_safety > 0.0 && dt_safety <= 0.1)) throw ModelError("dt_safety must lie in (0, 0.1]");
  if (!(dt_cap > 0.0)) throw ModelError("dt_cap must be positive");
  if (path_count < 1) throw ModelError("path_count must be at least 1");
  if (record_stride < 1) throw ModelError("record_stride must be at least 1");
  if (initial_state < 1 || initial_state > model.states())
    throw ModelError("initial_state must lie in 1.." + std::to_string(model.states()));
  if (!initial_position.empty() &&
      static_cast<int>(initial_position.size()) != model.dimension())
    throw ModelError("initial_position must have " + std::to_string(model.dimension()) +
                     " component(s)");
}

double effective_dt(const ModelDefinition& model, const SimulationConfig& config) {
  const double lambda_max = model.states() * model.rate_sup();
  if (lambda_max <= 0.0) return config.dt_cap;
  return std::min(config.dt_cap, config.dt_safety * config.epsilon / lambda_max);
}

std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t path_index) {
  std::uint64_t z = master_seed + (path_index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

double reduce_fast(double value, double epsilon, double period) {
  double r = std::fmod(value / epsilon, period);
  if (r < 0) r += period;
  return r;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Trajectory simulate_path(const ModelDefinition& model, const SimulationConfig& config,
                         std::uint64_t path_index) {
  config.validate(model);
  const int d = model.dimension();
  const int J = model.states();
  const double eps = config.epsilon;
  const double period = model.period();
  const double dt_max = effective_dt(model, config);
  const auto steps = static_cast<long>(std::ceil(config.horizon / dt_max - 1e-9));
  const double dt = config.horizon / static_cast<double>(steps);
  const double noise = std::sqrt(eps * dt);

  std::mt19937_64 rng(stream_seed(config.master_seed, path_index));
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> y(d, 0.0), fast(d), g(d), rates(J);
  if (!config.initial_position.empty()) y = config.initial_position;
  int state = config.initial_state - 1;

  Trajectory traj;
  traj.dimension = d;
  const auto records = static_cast<std::size_t>(steps / config.record_stride + 2);
  traj.times.reserve(records);
  traj.positions.reserve(records * d);
  traj.states.reserve(records);
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.positions.insert(traj.positions.end(), y.begin(), y.end());
    traj.states.push_back(state + 1);
  };
  record(0.0);

  for (long step = 1; step <= steps; ++step) {
    try {
      for (int k = 0; k < d; ++k) fast[k] = reduce_fast(y[k], eps, period);
      model.drift(state, y, fast, g);
      for (int k = 0; k < d; ++k) y[k] += -g[k] * dt + noise * gauss(rng);
      for (int k = 0; k < d; ++k) {
        if (!std::isfinite(y[k])) throw NumericalError("position became non-finite");
        fast[k] = reduce_fast(y[k], eps, period);
      }
      double total = 0.0;
      for (int j = 0; j < J; ++j) {
        rates[j] = model.rate(state, j, y, fast);
        total += rates[j];
      }
      const double intensity = total / eps * dt;
      traj.max_step_intensity = std::max(traj.max_step_intensity, intensity);
      if (intensity > 0.0) {
        const double u = uniform01(rng);
        if (u < -std::expm1(-intensity)) {
          double target = uniform01(rng) * total;
          int next = state;
          for (int j = 0; j < J; ++j) {
            if (j == state || rates[j] <= 0.0) continue;
            next = j;
            if (target < rates[j]) break;
            target -= rates[j];
          }
          state = next;
          ++traj.jump_count;
        }
      }
    } catch (const NumericalError& e) {
      throw NumericalError("path " + std::to_string(path_index) + " aborted at t = " +
                           std::to_string(step * dt) + ": " + e.what());
    }
    if (step % config.record_stride == 0 || step == steps)
      record(step == steps ? config.horizon : static_cast<double>(step) * dt);
  }
  return traj;
}

double sup_deviation(const Trajectory& trajectory, const PathSample& reference) {
  if (reference.dimension != trajectory.dimension)
    throw ModelError("reference dimension does not match the trajectory");
  if (trajectory.times.empty()) return 0.0;
  if (reference.times.empty() || reference.times.front() > trajectory.times.front() ||
      reference.times.back() < trajectory.times.back() * (1 - 1e-12))
    throw ModelError("reference path covers [" +
                     (reference.times.empty() ? std::string("-")
                                              : std::to_string(reference.times.front()) + ", " +
                                                    std::to_string(reference.times.back())) +
                     "] but the trajectory runs to t = " +
                     std::to_string(trajectory.times.back()));
  const int d = trajectory.dimension;
  std::vector<double> r(d);
  double worst = 0.0;
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    reference.interpolate(std::min(trajectory.times[k], reference.times.back()), r);
    double dist2 = 0.0;
    const auto pos = trajectory.position(k);
    for (int c = 0; c < d; ++c) dist2 += (pos[c] - r[c]) * (pos[c] - r[c]);
    worst = std::max(worst, std::sqrt(dist2));
  }
  return worst;
}

EnsembleSummary simulate_ensemble(const ModelDefinition& model, const SimulationConfig& config,
                                  const PathSample* reference, int threads) {
  config.validate(model);
  if (reference) reference->validate();
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int d = model.dimension();
  const int paths = config.path_count;

  EnsembleSummary summary;
  summary.dimension = d;
  summary.epsilon = config.epsilon;
  summary.path_count = paths;

  // Welford accumulators per recorded time and coordinate, fed in path order.
  std::vector<double> mean, m2;
  double jumps = 0.0;

  const int block = std::max(1, threads) * 8;
  std::vector<Trajectory> batch;
  for (int first = 0; first < paths; first += block) {
    const int count = std::min(block, paths - first);
    batch.assign(count, Trajectory{});
    std::vector<std::string> errors(count);
    auto work = [&](int worker) {
      for (int k = worker; k < count; k += threads) {
        try {
          batch[k] = simulate_path(model, config, static_cast<std::uint64_t>(first + k));
        } catch (const std::exception& e) {
          errors[k] = e.what();
        }
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (int k = 0; k < count; ++k) {
      if (!errors[k].empty()) throw NumericalError(errors[k]);
      const Trajectory& traj = batch[k];
      const int index = first + k;
      if (index == 0) {
        summary.times = traj.times;
        mean.assign(traj.positions.size(), 0.0);
        m2.assign(traj.positions.size(), 0.0);
      }
      const double n = index + 1;
      for (std::size_t c = 0; c < traj.positions.size(); ++c) {
        const double delta = traj.positions[c] - mean[c];
        mean[c] += delta / n;
        m2[c] += delta * (traj.positions[c] - mean[c]);
      }
      jumps += traj.jump_count;
      if (reference) summary.sup_deviation.push_back(sup_deviation(traj, *reference));
      const auto last = traj.position(traj.size() - 1);
      summary.final_positions.insert(summary.final_positions.end(), last.begin(), last.end());
    }
  }

  summary.mean = mean;
  summary.sem.resize(mean.size());
  for (std::size_t c = 0; c < mean.size(); ++c)
    summary.sem[c] = paths > 1 ? std::sqrt(m2[c] / (paths - 1) / paths) : 0.0;
  summary.mean_jump_count = jumps / paths;
  return summary;
}

}  // namespace motorld
