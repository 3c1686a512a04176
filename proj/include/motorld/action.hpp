#pragma once

#include <span>
#include <string>
#include <vector>

#include "motorld/path.hpp"
#include "motorld/spectral.hpp"

namespace motorld {

struct LegendreResult {
  double value = 0.0;          // L(x, v)
  std::vector<double> p_star;  // maximising momentum
  int evaluations = 0;
};

/// Search half-width Pb = 2|v| + 2 sqrt(G^2 + 1) + 4, G = drift_sup_bound.
double legendre_bound(const ModelDefinition& model, std::span<const double> v);

/// L(x, v) = sup_p [p.v - H(x, p)]. In 1-d a golden-section search on
/// [-Pb, Pb] down to an interval of 1e-8; in 2-d best-effort gradient
/// ascent using the Hellmann-Feynman gradient. Throws NumericalError when
/// the maximiser sits within 1e-6 of the search boundary.
LegendreResult legendre(CellSolver& solver, std::span<const double> x, std::span<const double> v);
LegendreResult legendre(const ModelDefinition& model, const CellGrid& grid,
                        std::span<const double> x, std::span<const double> v);

struct ActionSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> v;
  double lagrangian = 0.0;
  std::vector<double> p_star;
};

struct ActionReport {
  double total_action = 0.0;
  std::vector<ActionSegment> segments;
  std::string rule = "midpoint";
};

/// Midpoint rule: sum_k (t_{k+1} - t_k) L((x_k + x_{k+1}) / 2, v_k) with the
/// segment velocity v_k. The initial cost is 0 (Dirac at x_0).
ActionReport path_action(CellSolver& solver, const PathSample& path);
ActionReport path_action(const ModelDefinition& model, const CellGrid& grid,
                         const PathSample& path);

/// Classical RK4 for dx/dt = lln_velocity(x) over [0, T] with a step of at
/// most dt (dt <= 1e-2); the step is shrunk so it divides T.
PathSample zero_cost_path(CellSolver& solver, std::span<const double> x0, double horizon,
                          double dt);
PathSample zero_cost_path(const ModelDefinition& model, const CellGrid& grid,
                          std::span<const double> x0, double horizon, double dt);

}  // namespace motorld
