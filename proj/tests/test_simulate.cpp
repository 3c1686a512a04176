#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "motorld/errors.hpp"
#include "motorld/simulate.hpp"
#include "motorld/spectral.hpp"

using namespace motorld;

namespace {

struct Stats {
  double mean = 0.0, var = 0.0, sem = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  const double n = v.size();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  for (double x : v) s.var += (x - s.mean) * (x - s.mean);
  s.var /= n - 1;
  s.sem = std::sqrt(s.var / n);
  return s;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

PathSample line(double x0, double slope, double horizon) {
  return PathSample{1, {0.0, horizon}, {x0, x0 + slope * horizon}};
}

}  // namespace

TEST_CASE("free model is Brownian with variance epsilon t") {
  const auto m = builtin_model("free");
  SimulationConfig c;
  c.epsilon = 0.1;
  c.horizon = 1.0;
  c.path_count = 2000;
  c.master_seed = 11;
  c.record_stride = 100;
  const auto s = simulate_ensemble(m, c);
  const auto st = stats(s.final_positions);
  CHECK(std::abs(st.mean) <= 4 * st.sem);
  CHECK(st.var == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("switching count is Poisson with intensity r / epsilon") {
  const auto m = builtin_model("free");
  SimulationConfig c;
  c.epsilon = 0.1;
  c.horizon = 1.0;
  c.master_seed = 3;
  c.record_stride = 1000;
  std::vector<double> jumps;
  for (int k = 0; k < 2000; ++k) jumps.push_back(simulate_path(m, c, k).jump_count);
  const auto st = stats(jumps);
  CHECK(std::abs(st.mean - 10.0) <= 4 * st.sem);
}

TEST_CASE("gradient model follows its deterministic limit") {
  const auto m = builtin_model("gradient");
  SimulationConfig c;
  c.epsilon = 1e-3;
  c.horizon = 1.0;
  c.path_count = 100;
  c.master_seed = 5;
  const auto s = simulate_ensemble(m, c);
  const double sd = std::sqrt(2 * c.epsilon * c.horizon);
  for (double y : s.final_positions) CHECK(std::abs(y + 1.0) <= 5 * sd);
  const auto st = stats(s.final_positions);
  CHECK(std::abs(st.mean + 1.0) <= 4 * st.sem + 1e-3);
}

TEST_CASE("sup-deviation shrinks with epsilon") {
  const auto free = builtin_model("free");
  const PathSample still = line(0.0, 0.0, 1.0);
  std::vector<double> sup;
  for (double eps : {0.1, 0.05, 0.02}) {
    SimulationConfig c;
    c.epsilon = eps;
    c.path_count = 200;
    c.master_seed = 9;
    sup.push_back(mean(simulate_ensemble(free, c, &still).sup_deviation));
  }
  CHECK(sup[0] > sup[1]);
  CHECK(sup[1] > sup[2]);

  const auto grad = builtin_model("gradient");
  const PathSample limit = line(0.0, -1.0, 1.0);
  SimulationConfig c;
  c.path_count = 100;
  c.epsilon = 0.1;
  const double coarse = mean(simulate_ensemble(grad, c, &limit).sup_deviation);
  c.epsilon = 0.02;
  const double fine = mean(simulate_ensemble(grad, c, &limit).sup_deviation);
  CHECK(fine < coarse);
}

TEST_CASE("sup_deviation") {
  Trajectory t;
  t.times = {0.0, 0.5, 1.0};
  t.positions = {0.0, 0.5, 1.0};
  t.states = {1, 1, 1};
  CHECK(sup_deviation(t, line(0.0, 1.0, 1.0)) == doctest::Approx(0.0));
  t.positions = {0.0, 0.0, 0.0};
  CHECK(sup_deviation(t, line(0.0, 1.0, 1.0)) == doctest::Approx(1.0));
  const PathSample point{1, {0.0}, {0.0}};
  CHECK_THROWS_AS(sup_deviation(t, point), ModelError);
}

TEST_CASE("reproducible regardless of thread count") {
  const auto m = builtin_model("fig2");
  SimulationConfig c;
  c.epsilon = 0.1;
  c.horizon = 0.5;
  c.path_count = 37;
  c.master_seed = 42;
  const auto a = simulate_ensemble(m, c, nullptr, 1);
  const auto b = simulate_ensemble(m, c, nullptr, 4);
  CHECK(a.final_positions == b.final_positions);
  CHECK(a.mean == b.mean);
  CHECK(a.sem == b.sem);
  const auto t1 = simulate_path(m, c, 7), t2 = simulate_path(m, c, 7);
  CHECK(t1.positions == t2.positions);
  CHECK(t1.states == t2.states);
  CHECK(simulate_path(m, c, 8).positions != t1.positions);
  CHECK(stream_seed(1, 0) != stream_seed(0, 1));
}

TEST_CASE("jump probability per step stays below dt_safety") {
  const auto m = builtin_model("fig2");
  SimulationConfig c;
  c.epsilon = 0.05;
  c.horizon = 1.0;
  for (int k = 0; k < 5; ++k) {
    const auto t = simulate_path(m, c, k);
    CHECK(t.max_step_intensity <= c.dt_safety * (1 + 1e-9));
    CHECK(t.times.back() == 1.0);
  }
  CHECK(effective_dt(m, c) == doctest::Approx(0.05 * 0.05 / 4));
}

TEST_CASE("symmetric switching spends half the time in each state") {
  const auto m = builtin_model("free");
  SimulationConfig c;
  c.epsilon = 0.1;
  c.horizon = 5.0;
  c.master_seed = 17;
  std::vector<double> fraction;
  for (int k = 0; k < 100; ++k) {
    const auto t = simulate_path(m, c, k);
    const double ones = std::count(t.states.begin(), t.states.end(), 1);
    fraction.push_back(ones / t.states.size());
  }
  const auto st = stats(fraction);
  CHECK(std::abs(st.mean - 0.5) <= 4 * st.sem);
}

TEST_CASE("fig2 paths drift with the sign of the effective velocity" * doctest::may_fail()) {
  const auto m = builtin_model("fig2");
  const double v = lln_velocity(m, CellGrid::for_model(m), std::vector<double>{0.0})[0];
  SimulationConfig c;
  c.epsilon = 0.5;
  c.horizon = 20.0;
  c.path_count = 100;
  c.master_seed = 2;
  c.record_stride = 100;
  const auto s = simulate_ensemble(m, c);
  int agree = 0;
  for (double y : s.final_positions) agree += y * v > 0.0;
  MESSAGE("sign agreement at epsilon 0.5: " << agree << "/100, v* = " << v);
  CHECK(agree >= 90);
}

TEST_CASE("config validation") {
  const auto m = builtin_model("fig2");
  SimulationConfig c;
  c.epsilon = 0.0;
  CHECK_THROWS_AS(simulate_path(m, c, 0), ModelError);
  c = SimulationConfig{};
  c.initial_state = 5;
  CHECK_THROWS_AS(simulate_path(m, c, 0), ModelError);
  c = SimulationConfig{};
  c.dt_safety = 0.5;
  CHECK_THROWS_AS(simulate_path(m, c, 0), ModelError);
}

TEST_CASE("blow-up is reported with the path index") {
  const auto m = load_model(R"json({"name": "blow", "dimension": 1, "states": 1, "period": 1,
    "potential": ["-exp(x)"], "rates": [["0"]]})json");
  SimulationConfig c;
  c.epsilon = 0.01;
  c.horizon = 10.0;
  c.initial_position = {5.0};
  try {
    simulate_path(m, c, 3);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("path 3") != std::string::npos);
  }
}
