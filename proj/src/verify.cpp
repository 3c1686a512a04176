#include "motorld/verify.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "motorld/action.hpp"
#include "motorld/errors.hpp"
#include "motorld/io.hpp"

namespace motorld {

namespace {

using Point = std::vector<double>;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(std::span<const double> v) {
  if (v.size() == 1) return fmt(v[0]);
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
  return s + ")";
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }
  Point box(int d, double half_width) {
    Point p(d);
    for (double& c : p) c = uniform(-half_width, half_width);
    return p;
  }

 private:
  std::mt19937_64 rng_;
};

std::vector<Point> slow_samples(int d) {
  std::vector<Point> xs;
  for (int a = -2; a <= 2; ++a) {
    if (d == 1) {
      xs.push_back({double(a)});
    } else {
      for (int b = -2; b <= 2; ++b) xs.push_back({double(a), double(b)});
    }
  }
  return xs;
}

/// Momenta of Euclidean length r: +-r in 1-d, axes and diagonals in 2-d.
std::vector<Point> momenta_of_length(int d, double r) {
  if (d == 1) return {{-r}, {r}};
  const double s = r / std::sqrt(2.0);
  return {{r, 0}, {-r, 0}, {0, r}, {0, -r}, {s, s}, {-s, s}, {s, -s}, {-s, -s}};
}

std::string grid_context(const ModelDefinition& model, const CellGrid& grid) {
  return "model=" + model.name() + " N=" + std::to_string(grid.points_per_axis()) +
         " n=" + std::to_string(grid.size());
}

/// Smallest N for which h |p_k - g_k| <= 1 holds whenever |p_k| <= p_max.
int peclet_points(const ModelDefinition& model, double p_max) {
  return static_cast<int>(std::ceil(model.period() * (p_max + model.drift_sup_bound()) - 1e-9));
}

/// `grid` halved until its size is at most `max_size`; never below what
/// the Peclet condition needs for |p| <= p_max.
CellGrid fit_grid(const ModelDefinition& model, const CellGrid& grid, std::size_t max_size,
                  double p_max) {
  int n = grid.points_per_axis();
  const int floor_n = std::max(3, peclet_points(model, p_max));
  auto size_of = [&](int pts) {
    std::size_t s = model.states();
    for (int k = 0; k < model.dimension(); ++k) s *= pts;
    return s;
  };
  while (size_of(n) > max_size && n / 2 >= floor_n) n /= 2;
  if (size_of(n) > max_size)
    throw NumericalError("no grid with n <= " + std::to_string(max_size) +
                         " satisfies the Peclet condition for |p| <= " + fmt(p_max));
  return CellGrid(model.dimension(), n, model.period(), model.states());
}

CheckReport run_check(const std::string& name, double tolerance,
                      const std::function<void(CheckReport&)>& body) {
  CheckReport r;
  r.name = name;
  r.tolerance = tolerance;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("aborted: ") + e.what();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// ---------------------------------------------------------------- hamiltonian

CheckReport check_zero_momentum(CellSolver& solver, const std::vector<Point>& xs) {
  return run_check("hamiltonian_zero_momentum", 1e-10, [&](CheckReport& r) {
    const Point zero(solver.model().dimension(), 0.0);
    double worst = 0.0;
    Point witness;
    for (const auto& x : xs) {
      const double h = std::abs(solver.hamiltonian(x, zero));
      if (h >= worst) {
        worst = h;
        witness = x;
      }
    }
    r.measured = {{"max_abs_H", worst}};
    r.context = grid_context(solver.model(), solver.grid()) + " p=0 at " +
                std::to_string(xs.size()) + " sampled x";
    r.passed = worst <= r.tolerance;
    if (!r.passed) r.detail = "H(x, 0) = 0 violated at x = " + fmt(witness) + ": |H| = " + fmt(worst);
  });
}

CheckReport check_oracle(const ModelDefinition& model, const CellGrid& grid, std::uint64_t seed) {
  return run_check("perron_oracle_equivalence", 1e-8, [&](CheckReport& r) {
    const CellGrid small = fit_grid(model, grid, 512, 2.0);
    Sampler sampler(seed);
    const int d = model.dimension();
    double dl = 0.0, dv = 0.0, min_entry = std::numeric_limits<double>::infinity();
    std::string witness;
    for (int k = 0; k < 20; ++k) {
      const Point x = sampler.box(d, 2.0), p = sampler.box(d, 2.0);
      const CellOperator op = assemble_cell_operator(model, small, x, p);
      const EigenPair power = principal_eigenpair(op);
      const EigenPair dense = dense_eigen_oracle(op);
      const double diff = std::abs(power.lambda - dense.lambda);
      const Eigen::VectorXd lp = power.left / power.left.maxCoeff();
      const Eigen::VectorXd ld = dense.left / dense.left.maxCoeff();
      const double vec = std::max((power.right - dense.right).lpNorm<Eigen::Infinity>(),
                                  (lp - ld).lpNorm<Eigen::Infinity>());
      min_entry = std::min({min_entry, power.right.minCoeff(), power.left.minCoeff()});
      if (diff > dl || vec > dv) witness = "x = " + fmt(x) + ", p = " + fmt(p);
      dl = std::max(dl, diff);
      dv = std::max(dv, vec);
    }
    r.measured = {{"max_lambda_diff", dl}, {"max_vector_diff", dv}, {"min_vector_entry", min_entry}};
    r.context = grid_context(model, small) + " 20 random (x, p) in [-2, 2]";
    r.passed = dl <= 1e-8 && dv <= 1e-6 && min_entry > 0.0;
    if (!r.passed)
      r.detail = "power iteration and dense eigensolver disagree (or eigenvector not positive) near " +
                 witness;
  });
}

CheckReport check_convexity(const ModelDefinition& model, const CellGrid& grid,
                            const std::vector<Point>& xs, std::uint64_t seed) {
  return run_check("midpoint_convexity", 5e-4, [&](CheckReport& r) {
    const int d = model.dimension();
    const int fine = grid.points_per_axis();
    const int needed = std::max(3, peclet_points(model, 3.0));
    std::vector<int> levels;
    for (int n : {fine / 4, fine / 2, fine})
      if (n >= needed) levels.push_back(n);
    if (levels.empty() || levels.back() != fine) levels.push_back(fine);

    Sampler sampler(seed);
    std::vector<std::array<Point, 3>> pairs;  // x, p1, p2
    for (int k = 0; k < 100; ++k) {
      Point p1 = sampler.box(d, 3.0), p2 = sampler.box(d, 3.0);
      pairs.push_back({xs[k % xs.size()], p1, p2});
    }

    std::vector<double> violation;
    double worst_fine = -std::numeric_limits<double>::infinity();
    std::string witness;
    for (int n : levels) {
      CellSolver solver(model, CellGrid(d, n, model.period(), model.states()));
      double level_violation = 0.0;
      for (const auto& [x, p1, p2] : pairs) {
        Point mid(d);
        for (int c = 0; c < d; ++c) mid[c] = 0.5 * (p1[c] + p2[c]);
        const double hm = solver.hamiltonian(x, mid);
        const double defect =
            (hm - 0.5 * (solver.hamiltonian(x, p1) + solver.hamiltonian(x, p2))) / (1.0 + std::abs(hm));
        level_violation = std::max(level_violation, defect);
        if (n == fine && defect > worst_fine) {
          worst_fine = defect;
          witness = "x = " + fmt(x) + ", p1 = " + fmt(p1) + ", p2 = " + fmt(p2);
        }
      }
      violation.push_back(level_violation);
      r.measured.push_back({"violation_N" + std::to_string(n), level_violation});
    }
    bool monotone = true;
    for (std::size_t k = 1; k < violation.size(); ++k)
      if (violation[k] > std::max(violation[k - 1], 1e-10)) monotone = false;
    std::string lv;
    for (int n : levels) lv += (lv.empty() ? "" : ",") + std::to_string(n);
    r.context = "model=" + model.name() + " N in {" + lv + "} 100 random pairs in [-3, 3]";
    r.passed = violation.back() <= r.tolerance && monotone;
    if (!r.passed)
      r.detail = !monotone ? "convexity defect does not shrink under grid refinement"
                           : "convexity in p violated at " + witness + ": relative defect " +
                                 fmt(worst_fine);
  });
}

CheckReport check_coercivity(CellSolver& solver, const std::vector<Point>& xs) {
  return run_check("coercivity_bound", 1e-3, [&](CheckReport& r) {
    const int d = solver.model().dimension();
    double margin = std::numeric_limits<double>::infinity();
    double g_max = 0.0;
    std::string witness;
    for (const auto& x : xs) {
      const Point zero(d, 0.0);
      const CellOperator op0 = solver.assemble(x, zero);
      double g = 0.0;
      for (Eigen::Index row = 0; row < op0.drift.rows(); ++row) g = std::max(g, op0.drift.row(row).norm());
      g_max = std::max(g_max, g);
      for (double len : {2.0, 3.0, 4.0}) {
        for (const auto& p : momenta_of_length(d, len)) {
          const double h = solver.hamiltonian(x, p);
          const double m = h - (len * len / 4.0 - g * g);
          if (m < margin) {
            margin = m;
            witness = "x = " + fmt(x) + ", p = " + fmt(p) + ", H = " + fmt(h) + ", G = " + fmt(g);
          }
        }
      }
    }
    r.measured = {{"min_margin", margin}, {"G", g_max}};
    r.context = grid_context(solver.model(), solver.grid()) + " |p| in {2, 3, 4}";
    r.passed = margin >= -r.tolerance;
    if (!r.passed) r.detail = "H(x, p) >= |p|^2/4 - G^2 violated at " + witness;
  });
}

CheckReport check_hellmann_feynman(CellSolver& solver, const std::vector<Point>& xs) {
  return run_check("hellmann_feynman_gradient", 1e-4, [&](CheckReport& r) {
    const int d = solver.model().dimension();
    const double step = 1e-4;
    double worst = 0.0;
    std::string witness;
    for (const auto& x : xs) {
      for (double pv : {-1.0, 0.5, 1.5}) {
        Point p(d, pv);
        const auto hf = solver.hamiltonian_grad_p(x, p);
        for (int c = 0; c < d; ++c) {
          Point hi = p, lo = p;
          hi[c] += step;
          lo[c] -= step;
          const double fd = (solver.hamiltonian(x, hi) - solver.hamiltonian(x, lo)) / (2 * step);
          const double err = std::abs(hf[c] - fd) / std::max(1.0, std::abs(fd));
          if (err >= worst) {
            worst = err;
            witness = "x = " + fmt(x) + ", p = " + fmt(p) + ": HF " + fmt(hf[c]) + " vs FD " + fmt(fd);
          }
        }
      }
    }
    r.measured = {{"max_relative_error", worst}};
    r.context = grid_context(solver.model(), solver.grid()) + " p in {-1, 0.5, 1.5}, FD step 1e-4";
    r.passed = worst <= r.tolerance;
    if (!r.passed) r.detail = "Hellmann-Feynman gradient disagrees with finite differences at " + witness;
  });
}

// -------------------------------------------------------------------- measure

CheckReport check_stationary_measure(CellSolver& solver, const std::vector<Point>& xs) {
  return run_check("stationary_measure", 1e-9, [&](CheckReport& r) {
    const int d = solver.model().dimension();
    double min_w = std::numeric_limits<double>::infinity(), mass = 0.0, residual = 0.0;
    std::string witness;
    for (const auto& x : xs) {
      const CellMeasure mu = solver.stationary_measure(x);
      const CellOperator op = solver.assemble(x, Point(d, 0.0));
      const double res = (op.generator.transpose() * mu.weights).lpNorm<Eigen::Infinity>();
      min_w = std::min(min_w, mu.weights.minCoeff());
      mass = std::max(mass, std::abs(mu.weights.sum() - 1.0));
      if (res >= residual) {
        residual = res;
        witness = fmt(x);
      }
    }
    r.measured = {{"min_weight", min_w}, {"max_mass_error", mass}, {"max_residual", residual}};
    r.context = grid_context(solver.model(), solver.grid());
    r.passed = min_w >= 0.0 && mass <= 1e-12 && residual <= r.tolerance;
    if (!r.passed)
      r.detail = "stationary measure is not a normalised nonnegative null vector at x = " + witness;
  });
}

CheckReport check_velocity(CellSolver& solver, const std::vector<Point>& xs) {
  return run_check("velocity_consistency", 1e-6, [&](CheckReport& r) {
    const int d = solver.model().dimension();
    double worst = 0.0;
    std::string witness;
    for (const auto& x : xs) {
      const auto hf = solver.hamiltonian_grad_p(x, Point(d, 0.0));
      const auto v = solver.lln_velocity(x);
      for (int c = 0; c < d; ++c) {
        const double diff = std::abs(hf[c] - v[c]);
        if (diff >= worst) {
          worst = diff;
          witness = "x = " + fmt(x) + ": dH/dp(x, 0) = " + fmt(hf[c]) + ", v* = " + fmt(v[c]);
        }
      }
    }
    r.measured = {{"max_abs_diff", worst}};
    r.context = grid_context(solver.model(), solver.grid());
    r.passed = worst <= r.tolerance;
    if (!r.passed) r.detail = "law-of-large-numbers velocity differs from dH/dp(x, 0) at " + witness;
  });
}

std::vector<CheckReport> check_dv(const ModelDefinition& model, const CellGrid& grid,
                                  const std::vector<Point>& xs, std::uint64_t seed) {
  std::vector<CheckReport> out;
  const int d = model.dimension();
  const double p_max = 1.0;
  CellGrid small(d, 3, model.period(), model.states());
  std::string small_error;
  try {
    small = fit_grid(model, grid, 128, p_max);
  } catch (const std::exception& e) {
    small_error = e.what();
  }
  auto guard = [&] {
    if (!small_error.empty()) throw NumericalError(small_error);
  };

  out.push_back(run_check("dv_stationary_zero", 1e-6, [&](CheckReport& r) {
    guard();
    double worst = 0.0;
    std::string witness;
    for (const auto& x : xs) {
      for (double pv : {0.0, 0.5}) {
        const Point p(d, pv);
        const CellOperator op = assemble_cell_operator(model, small, x, p);
        const double i = dv_functional(op, generator_stationary_measure(op));
        if (std::abs(i) >= worst) {
          worst = std::abs(i);
          witness = "x = " + fmt(x) + ", p = " + fmt(p);
        }
      }
    }
    r.measured = {{"max_abs_I", worst}};
    r.context = grid_context(model, small) + " p in {0, 0.5}";
    r.passed = worst <= r.tolerance;
    if (!r.passed) r.detail = "rate of the generator's stationary measure is not 0 at " + witness;
  }));

  out.push_back(run_check("dv_optimizer_identity", 1e-4, [&](CheckReport& r) {
    guard();
    double worst = 0.0;
    std::string witness;
    for (const auto& x : xs) {
      for (double pv : {-p_max, p_max}) {
        const Point p(d, pv);
        const CellOperator op = assemble_cell_operator(model, small, x, p);
        const EigenPair pair = principal_eigenpair(op);
        Eigen::VectorXd w = pair.left.cwiseProduct(pair.right);
        w /= w.sum();
        const double i = dv_functional(op, CellMeasure{w});
        const double gap = std::abs(pair.lambda - (w.dot(op.potential) - i));
        if (gap >= worst) {
          worst = gap;
          witness = "x = " + fmt(x) + ", p = " + fmt(p);
        }
      }
    }
    r.measured = {{"max_gap", worst}};
    r.context = grid_context(model, small) + " p in {-1, 1}";
    r.passed = worst <= r.tolerance;
    if (!r.passed)
      r.detail = "variational formula not attained by left*right at " + witness;
  }));

  out.push_back(run_check("dv_variational_bound", 1e-4, [&](CheckReport& r) {
    guard();
    Sampler sampler(seed + 7);
    double worst = -std::numeric_limits<double>::infinity(), min_i = std::numeric_limits<double>::infinity();
    std::string witness;
    for (int k = 0; k < 50; ++k) {
      const Point& x = xs[k % xs.size()];
      const Point p = sampler.box(d, p_max);
      const CellOperator op = assemble_cell_operator(model, small, x, p);
      const double lambda = principal_eigenpair(op, {.compute_left = false}).lambda;
      Eigen::VectorXd w(op.generator.rows());
      for (Eigen::Index z = 0; z < w.size(); ++z) w[z] = -std::log(sampler.uniform(1e-12, 1.0));
      w /= w.sum();
      const double i = dv_functional(op, CellMeasure{w});
      min_i = std::min(min_i, i);
      const double excess = w.dot(op.potential) - i - lambda;
      if (excess > worst) {
        worst = excess;
        witness = "x = " + fmt(x) + ", p = " + fmt(p);
      }
    }
    r.measured = {{"max_excess", worst}, {"min_I", min_i}};
    r.context = grid_context(model, small) + " 50 random measures, p in [-1, 1]";
    r.passed = worst <= r.tolerance && min_i >= -1e-10;
    if (!r.passed)
      r.detail = min_i < -1e-10 ? "rate functional negative"
                                : "sum mu V - I(mu) exceeds the principal eigenvalue at " + witness;
  }));
  return out;
}

// --------------------------------------------------------------------- action

std::vector<CheckReport> check_action(CellSolver& solver, const std::vector<Point>& xs,
                                      std::uint64_t seed) {
  std::vector<CheckReport> out;
  const ModelDefinition& model = solver.model();
  const int d = model.dimension();
  double min_l = std::numeric_limits<double>::infinity();
  std::string min_witness;
  auto track = [&](const Point& x, const Point& v, double l) {
    if (l < min_l) {
      min_l = l;
      min_witness = "x = " + fmt(x) + ", v = " + fmt(v);
    }
  };

  out.push_back(run_check("fenchel_inequality", 1e-6, [&](CheckReport& r) {
    Sampler sampler(seed + 11);
    double worst = -std::numeric_limits<double>::infinity();
    std::string witness;
    for (int k = 0; k < 200; ++k) {
      const Point x = sampler.box(d, 2.0), v = sampler.box(d, 1.0), p = sampler.box(d, 3.0);
      const double l = legendre(solver, x, v).value;
      track(x, v, l);
      double pv = 0.0;
      for (int c = 0; c < d; ++c) pv += p[c] * v[c];
      const double excess = pv - l - solver.hamiltonian(x, p);
      if (excess > worst) {
        worst = excess;
        witness = "x = " + fmt(x) + ", v = " + fmt(v) + ", p = " + fmt(p);
      }
    }
    r.measured = {{"max_excess", worst}};
    r.context = grid_context(model, solver.grid()) + " 200 random (x, v, p)";
    r.passed = worst <= r.tolerance;
    if (!r.passed) r.detail = "p.v <= L(x, v) + H(x, p) violated at " + witness;
  }));

  out.push_back(run_check("lagrangian_zero_at_lln_velocity", 1e-6, [&](CheckReport& r) {
    double worst = 0.0;
    std::string witness;
    for (const auto& x : xs) {
      const auto v = solver.lln_velocity(x);
      const double l = legendre(solver, x, v).value;
      track(x, v, l);
      if (std::abs(l) >= worst) {
        worst = std::abs(l);
        witness = "x = " + fmt(x) + ", v* = " + fmt(v);
      }
    }
    r.measured = {{"max_L_at_v_star", worst}};
    r.context = grid_context(model, solver.grid());
    r.passed = worst <= r.tolerance;
    if (!r.passed) r.detail = "L(x, v*(x)) = 0 violated at " + witness;
  }));

  out.push_back(run_check("lagrangian_strict_minimum", 1e-3, [&](CheckReport& r) {
    double c_min = std::numeric_limits<double>::infinity();
    std::string witness;
    for (const auto& x : xs) {
      const auto vs = solver.lln_velocity(x);
      for (double off : {-1.0, -0.5, -0.1, 0.1, 0.5, 1.0}) {
        Point v = vs;
        v[0] += off;
        const double l = legendre(solver, x, v).value;
        track(x, v, l);
        const double c = l / (off * off);
        if (c < c_min) {
          c_min = c;
          witness = "x = " + fmt(x) + ", v = " + fmt(v);
        }
      }
    }
    r.measured = {{"min_curvature_constant", c_min}};
    r.context = grid_context(model, solver.grid()) + " |v - v*| in {0.1, 0.5, 1}";
    r.passed = c_min > r.tolerance;
    if (!r.passed) r.detail = "L(x, v) >= c (v - v*)^2 fails for c > 1e-3 at " + witness;
  }));

  out.push_back(run_check("quadrature_consistency", 4.0, [&](CheckReport& r) {
    std::vector<double> actions;
    for (int k : {4, 8, 16}) {
      PathSample path;
      path.dimension = d;
      for (int s = 0; s <= k; ++s) {
        const double t = static_cast<double>(s) / k;
        path.times.push_back(t);
        for (int c = 0; c < d; ++c) path.points.push_back(0.5 * std::sin(2.0 * t) + 0.1 * c);
      }
      const ActionReport rep = path_action(solver, path);
      for (const auto& seg : rep.segments) {
        if (seg.lagrangian < min_l) {
          min_l = seg.lagrangian;
          min_witness = "segment [" + fmt(seg.t0) + ", " + fmt(seg.t1) + "] of the test path";
        }
      }
      actions.push_back(rep.total_action);
      r.measured.push_back({"action_K" + std::to_string(k), rep.total_action});
    }
    const double first = std::abs(actions[1] - actions[0]);
    const double second = std::abs(actions[2] - actions[1]);
    r.context = grid_context(model, solver.grid()) + " x(t) = 0.5 sin(2t) on [0, 1], K in {4, 8, 16}";
    r.passed = second <= r.tolerance * first + 1e-9;
    if (!r.passed)
      r.detail = "midpoint action does not settle under refinement: changes " + fmt(first) +
                 " then " + fmt(second);
  }));

  CheckReport nonneg;
  nonneg.name = "lagrangian_nonnegative";
  nonneg.tolerance = 1e-8;
  nonneg.measured = {{"min_L", min_l}};
  nonneg.context = grid_context(model, solver.grid()) + " all Lagrangian values of this suite";
  nonneg.passed = min_l >= -nonneg.tolerance;
  if (!nonneg.passed) nonneg.detail = "L(x, v) >= 0 violated at " + min_witness;
  out.push_back(nonneg);
  return out;
}

}  // namespace

std::vector<CheckReport> run_check_suite(const ModelDefinition& model, const CellGrid& grid,
                                         std::string_view suite, std::uint64_t seed) {
  const bool all = suite == "all";
  if (!all && suite != "hamiltonian" && suite != "measure" && suite != "action")
    throw ModelError("unknown suite \"" + std::string(suite) +
                     "\"; expected hamiltonian, measure, action or all");
  const auto xs = slow_samples(model.dimension());
  CellSolver solver(model, grid);
  std::vector<CheckReport> reports;
  if (all || suite == "hamiltonian") {
    reports.push_back(check_zero_momentum(solver, xs));
    reports.push_back(check_oracle(model, grid, seed));
    reports.push_back(check_convexity(model, grid, xs, seed + 1));
    reports.push_back(check_coercivity(solver, xs));
    reports.push_back(check_hellmann_feynman(solver, xs));
  }
  if (all || suite == "measure") {
    reports.push_back(check_stationary_measure(solver, xs));
    reports.push_back(check_velocity(solver, xs));
    for (auto& r : check_dv(model, grid, xs, seed + 2)) reports.push_back(std::move(r));
  }
  if (all || suite == "action") {
    for (auto& r : check_action(solver, xs, seed + 3)) reports.push_back(std::move(r));
  }
  if (all) reports.push_back(check_containment(model));
  return reports;
}

CheckReport check_containment(const ModelDefinition& model) {
  return run_check("containment", 1e-3, [&](CheckReport& r) {
    const int d = model.dimension();
    std::vector<double> radii{0.0};
    for (int k = -60; k <= 120; ++k) radii.push_back(std::pow(10.0, k / 20.0));
    std::vector<Point> directions;
    if (d == 1) {
      directions = {{1.0}, {-1.0}};
    } else {
      for (int k = 0; k < 8; ++k) {
        const double a = k * std::acos(-1.0) / 4.0;
        directions.push_back({std::cos(a), std::sin(a)});
      }
    }
    const auto fast = ValidationGrid::fast_samples(d, model.period());
    double bulk = -std::numeric_limits<double>::infinity();
    double tail = -std::numeric_limits<double>::infinity();
    Point witness, x(d), grad(d), g(d);
    double best = -std::numeric_limits<double>::infinity();
    for (double rad : radii) {
      for (const auto& dir : directions) {
        for (int c = 0; c < d; ++c) x[c] = rad * dir[c];
        const double denom = 1.0 + rad * rad;
        double grad2 = 0.0;
        for (int c = 0; c < d; ++c) {
          grad[c] = x[c] / denom;
          grad2 += grad[c] * grad[c];
        }
        for (const auto& y : fast) {
          for (int i = 0; i < model.states(); ++i) {
            model.drift(i, x, y, g);
            double v = 0.5 * grad2;
            for (int c = 0; c < d; ++c) v -= grad[c] * g[c];
            if (!std::isfinite(v)) throw NumericalError("V is not finite at x = " + fmt(x));
            if (rad <= 1e3) bulk = std::max(bulk, v);
            if (rad >= 1e3) tail = std::max(tail, v);
            if (v > best) {
              best = v;
              witness = x;
            }
          }
        }
      }
    }
    r.measured = {{"sup", best}, {"sup_bulk", bulk}, {"sup_tail", tail}};
    r.context = "model=" + model.name() + " |x| log-spaced in [1e-3, 1e6] plus 0, " +
                std::to_string(fast.size()) + " fast samples; sup attained at x = " + fmt(witness);
    r.passed = std::isfinite(best) && tail <= bulk + r.tolerance;
    if (!r.passed)
      r.detail = "containment function bound grows in the tail: sup over |x| >= 1e3 is " +
                 fmt(tail) + " against " + fmt(bulk) + " in the bulk";
  });
}

LlnResult lln_experiment(const ModelDefinition& model, const CellGrid& grid,
                         std::vector<double> epsilons, int path_count, double horizon,
                         std::uint64_t seed, int threads) {
  if (epsilons.size() < 2) throw ModelError("lln_experiment needs at least two epsilons");
  for (std::size_t k = 1; k < epsilons.size(); ++k)
    if (!(epsilons[k] < epsilons[k - 1]))
      throw ModelError("lln_experiment epsilons must be strictly decreasing");
  const int d = model.dimension();
  LlnResult result;
  CellSolver solver(model, grid);
  const Point x0(d, 0.0);
  result.reference = zero_cost_path(solver, x0, horizon, 1e-2);
  const auto ref_end = result.reference.point(result.reference.size() - 1);

  std::vector<double> mean_sup;
  for (double eps : epsilons) {
    SimulationConfig config;
    config.epsilon = eps;
    config.horizon = horizon;
    config.master_seed = seed;
    config.path_count = path_count;
    config.initial_position = x0;
    result.ensembles.push_back(simulate_ensemble(model, config, &result.reference, threads));
    const auto& s = result.ensembles.back().sup_deviation;
    double m = 0.0;
    for (double v : s) m += v;
    mean_sup.push_back(m / s.size());
  }

  CheckReport& r = result.report;
  r.name = "lln_concentration";
  r.tolerance = 0.05;
  bool decreasing = true;
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    r.measured.push_back({"mean_sup_deviation_eps" + format_number(epsilons[k]), mean_sup[k]});
    if (k > 0 && !(mean_sup[k] < mean_sup[k - 1])) decreasing = false;
  }
  const EnsembleSummary& last = result.ensembles.back();
  const std::size_t tail = last.mean.size() - d;
  bool within = true;
  for (int c = 0; c < d; ++c) {
    const double disp = last.mean[tail + c] - x0[c];
    const double ref = ref_end[c] - x0[c];
    const double allowance = 3.0 * last.sem[tail + c] + 0.05;
    r.measured.push_back({"mean_displacement_" + std::to_string(c + 1), disp});
    r.measured.push_back({"reference_displacement_" + std::to_string(c + 1), ref});
    r.measured.push_back({"allowance_" + std::to_string(c + 1), allowance});
    if (!(std::abs(disp - ref) <= allowance)) within = false;
  }
  const double ref0 = ref_end[0] - x0[0];
  if (std::abs(ref0) < 1e-12) {
    result.sign_agreement = std::numeric_limits<double>::quiet_NaN();
  } else {
    int agree = 0;
    for (int k = 0; k < last.path_count; ++k)
      if ((last.final_positions[k * d] - x0[0]) * ref0 > 0.0) ++agree;
    result.sign_agreement = static_cast<double>(agree) / last.path_count;
    r.measured.push_back({"sign_agreement", result.sign_agreement});
  }
  r.context = "model=" + model.name() + " N=" + std::to_string(grid.points_per_axis()) +
              " paths=" + std::to_string(path_count) + " T=" + format_number(horizon) +
              " seed=" + std::to_string(seed);
  r.passed = decreasing && within;
  if (!decreasing)
    r.detail = "mean sup-deviation from the zero-cost path does not decrease with epsilon";
  else if (!within)
    r.detail = "mean final displacement at epsilon = " + format_number(epsilons.back()) +
               " misses the zero-cost path by more than 3 SEM + 0.05";
  return result;
}

CheckReport fig2_experiment(const std::filesystem::path& out_dir, std::uint64_t seed,
                            int threads, int grid_points) {
  const ModelDefinition model = builtin_model("fig2");
  const CellGrid grid = CellGrid::for_model(model, grid_points);
  CellSolver solver(model, grid);
  const Point x0{0.0};
  const double v_star = solver.lln_velocity(x0)[0];
  solver.set_cache_enabled(false);
  const double v_other = solver.lln_velocity(Point{1.3})[0];

  {
    std::ostringstream csv;
    write_measure_csv(csv, grid, solver.stationary_measure(x0));
    write_text_file(out_dir / "stationary_measure.csv", csv.str());
  }

  auto stride_for = [&](const SimulationConfig& c, long target) {
    const long steps = static_cast<long>(std::ceil(c.horizon / effective_dt(model, c) - 1e-9));
    return static_cast<int>(std::max(1L, steps / target));
  };

  for (double eps : {0.5, 0.1, 0.02}) {
    SimulationConfig c;
    c.epsilon = eps;
    c.horizon = 20.0;
    c.master_seed = seed;
    c.record_stride = stride_for(c, 4000);
    std::ostringstream csv;
    write_trajectory_csv(csv, simulate_path(model, c, 0));
    write_text_file(out_dir / ("trajectory_eps" + format_number(eps) + ".csv"), csv.str());
  }

  SimulationConfig ens;
  ens.epsilon = 0.02;
  ens.horizon = 5.0;
  ens.master_seed = seed;
  ens.path_count = 100;
  ens.record_stride = stride_for(ens, 1000);
  const EnsembleSummary summary = simulate_ensemble(model, ens, nullptr, threads);
  write_text_file(out_dir / "ensemble_summary.json", summary_json(summary));

  int agree = 0;
  for (int k = 0; k < summary.path_count; ++k)
    if (summary.final_positions[k] * v_star > 0.0) ++agree;
  const double fraction = static_cast<double>(agree) / summary.path_count;

  CheckReport r;
  r.name = "fig2_sign_agreement";
  r.tolerance = 0.9;
  r.measured = {{"v_star", v_star},
                {"v_star_x_independence", std::abs(v_star - v_other)},
                {"sign_agreement", fraction}};
  r.context = "model=fig2 N=" + std::to_string(grid.points_per_axis()) +
              " eps=0.02 paths=100 T=5 seed=" + std::to_string(seed);
  r.passed = fraction >= r.tolerance && std::abs(v_star - v_other) <= 1e-9;
  if (!r.passed)
    r.detail = fraction < r.tolerance ? "fewer than 90% of final displacements share the sign of v*"
                                      : "v* depends on x although fig2 has no slow dependence";
  return r;
}

}  // namespace motorld
