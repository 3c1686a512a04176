#include "motorld/action.hpp"

#include <cmath>
#include <string>

#include "motorld/errors.hpp"

namespace motorld {

double legendre_bound(const ModelDefinition& model, std::span<const double> v) {
  double norm2 = 0.0;
  for (double c : v) norm2 += c * c;
  const double g = model.drift_sup_bound();
  return 2.0 * std::sqrt(norm2) + 2.0 * std::sqrt(g * g + 1.0) + 4.0;
}

namespace {

std::string point_string(std::span<const double> x) {
  std::string s = "(";
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k) s += ", ";
    s += std::to_string(x[k]);
  }
  return s + ")";
}

LegendreResult golden_section(CellSolver& solver, std::span<const double> x, double v,
                              double bound) {
  constexpr double kInvPhi = 0.6180339887498949;
  int evaluations = 0;
  auto objective = [&](double p) {
    ++evaluations;
    const double pp[1] = {p};
    return p * v - solver.hamiltonian(x, pp);
  };
  double a = -bound, b = bound;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > 1e-8) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
  }
  double p = fc >= fd ? c : d;
  double value = std::max(fc, fd);
  if (std::abs(std::abs(p) - bound) <= 1e-6)
    throw NumericalError("Legendre maximiser at the search boundary |p| = " +
                         std::to_string(bound) + " for x = " + point_string(x) +
                         ", v = " + std::to_string(v) +
                         "; the Hamiltonian is not coercive on this grid");
  return {value, {p}, evaluations};
}

LegendreResult gradient_ascent(CellSolver& solver, std::span<const double> x,
                               std::span<const double> v, double bound) {
  const std::size_t d = v.size();
  int evaluations = 0;
  std::vector<double> p(d, 0.0), trial(d), dir(d);
  auto objective = [&](std::span<const double> q) {
    ++evaluations;
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += q[k] * v[k];
    return s - solver.hamiltonian(x, q);
  };
  double f = objective(p);
  double step = 1.0;
  for (int it = 0; it < 500; ++it) {
    const auto grad_h = solver.hamiltonian_grad_p(x, p);
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      dir[k] = v[k] - grad_h[k];
      norm = std::max(norm, std::abs(dir[k]));
    }
    if (norm <= 1e-9) break;
    bool improved = false;
    for (int k = 0; k < 60 && !improved; ++k) {
      for (std::size_t c = 0; c < d; ++c) trial[c] = p[c] + step * dir[c];
      double r2 = 0.0;
      for (double c : trial) r2 += c * c;
      if (std::sqrt(r2) < bound) {
        const double ft = objective(trial);
        if (ft >= f + 1e-4 * step * norm * norm) {
          p = trial;
          f = ft;
          improved = true;
          step *= 2.0;
          break;
        }
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  double r2 = 0.0;
  for (double c : p) r2 += c * c;
  if (bound - std::sqrt(r2) <= 1e-6)
    throw NumericalError("Legendre maximiser at the search boundary for x = " + point_string(x));
  return {f, p, evaluations};
}

}  // namespace

LegendreResult legendre(CellSolver& solver, std::span<const double> x,
                        std::span<const double> v) {
  const ModelDefinition& model = solver.model();
  if (static_cast<int>(x.size()) != model.dimension() ||
      static_cast<int>(v.size()) != model.dimension())
    throw ModelError("legendre: x and v must have the model dimension");
  const double bound = legendre_bound(model, v);
  if (model.dimension() == 1) return golden_section(solver, x, v[0], bound);
  return gradient_ascent(solver, x, v, bound);
}

LegendreResult legendre(const ModelDefinition& model, const CellGrid& grid,
                        std::span<const double> x, std::span<const double> v) {
  CellSolver solver(model, grid);
  return legendre(solver, x, v);
}

ActionReport path_action(CellSolver& solver, const PathSample& path) {
  path.validate();
  const int d = path.dimension;
  if (d != solver.model().dimension())
    throw ModelError("path dimension " + std::to_string(d) + " does not match the model");
  ActionReport report;
  std::vector<double> mid(d), v(d);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const double t0 = path.times[k], t1 = path.times[k + 1];
    const auto a = path.point(k), b = path.point(k + 1);
    for (int c = 0; c < d; ++c) {
      mid[c] = 0.5 * (a[c] + b[c]);
      v[c] = (b[c] - a[c]) / (t1 - t0);
    }
    auto lr = legendre(solver, mid, v);
    report.total_action += (t1 - t0) * lr.value;
    report.segments.push_back({t0, t1, v, lr.value, lr.p_star});
  }
  return report;
}

ActionReport path_action(const ModelDefinition& model, const CellGrid& grid,
                         const PathSample& path) {
  CellSolver solver(model, grid);
  return path_action(solver, path);
}

PathSample zero_cost_path(CellSolver& solver, std::span<const double> x0, double horizon,
                          double dt) {
  const int d = solver.model().dimension();
  if (static_cast<int>(x0.size()) != d)
    throw ModelError("zero_cost_path: x0 must have " + std::to_string(d) + " component(s)");
  if (!(dt > 0.0) || dt > 1e-2) throw ModelError("zero_cost_path: dt must lie in (0, 1e-2]");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ModelError("zero_cost_path: horizon must be positive");
  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  const double h = horizon / static_cast<double>(steps);

  PathSample path;
  path.dimension = d;
  path.times.reserve(steps + 1);
  path.points.reserve((steps + 1) * d);
  std::vector<double> x(x0.begin(), x0.end()), stage(d);
  path.times.push_back(0.0);
  path.points.insert(path.points.end(), x.begin(), x.end());

  for (long s = 1; s <= steps; ++s) {
    const auto k1 = solver.lln_velocity(x);
    for (int c = 0; c < d; ++c) stage[c] = x[c] + 0.5 * h * k1[c];
    const auto k2 = solver.lln_velocity(stage);
    for (int c = 0; c < d; ++c) stage[c] = x[c] + 0.5 * h * k2[c];
    const auto k3 = solver.lln_velocity(stage);
    for (int c = 0; c < d; ++c) stage[c] = x[c] + h * k3[c];
    const auto k4 = solver.lln_velocity(stage);
    for (int c = 0; c < d; ++c) x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    path.times.push_back(s == steps ? horizon : static_cast<double>(s) * h);
    path.points.insert(path.points.end(), x.begin(), x.end());
  }
  return path;
}

PathSample zero_cost_path(const ModelDefinition& model, const CellGrid& grid,
                          std::span<const double> x0, double horizon, double dt) {
  CellSolver solver(model, grid);
  return zero_cost_path(solver, x0, horizon, dt);
}

}  // namespace motorld
