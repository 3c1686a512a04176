#include "motorld/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "motorld/errors.hpp"

namespace motorld {

namespace {

constexpr double kPecletSlack = 1e-12;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_point(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
  return s + ")";
}

void check_point(std::span<const double> v, int dimension, const char* what) {
  if (static_cast<int>(v.size()) != dimension)
    throw ModelError(std::string(what) + " must have " + std::to_string(dimension) +
                     " component(s)");
  for (double c : v)
    if (!std::isfinite(c)) throw ModelError(std::string(what) + " must be finite");
}

bool graph_strongly_connected(const SparseMatrix& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  if (n <= 1) return true;
  auto reach = [&](const SparseMatrix& a) {
    std::vector<bool> seen(n, false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (SparseMatrix::InnerIterator it(a, u); it; ++it) {
        if (it.col() == u || !(it.value() > 0.0)) continue;
        if (!seen[it.col()]) {
          seen[it.col()] = true;
          ++count;
          stack.push_back(it.col());
        }
      }
    }
    return count == n;
  };
  SparseMatrix transposed = m.transpose();
  return reach(m) && reach(transposed);
}

struct PowerResult {
  Eigen::VectorXd vector;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Power iteration on A + cI (or its transpose) from the all-ones vector.
PowerResult power_iteration(const SparseMatrix& a, bool transpose,
                            const PowerIterationOptions& options) {
  const Eigen::Index n = a.rows();
  double shift = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) shift = std::max(shift, std::abs(a.coeff(k, k)));
  shift += 1.0;

  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd u(n);
  double previous = std::numeric_limits<double>::infinity();
  PowerResult result;
  for (int it = 1; it <= options.max_iterations; ++it) {
    if (transpose)
      u.noalias() = a.transpose() * v;
    else
      u.noalias() = a * v;
    const double lambda = v.dot(u) / v.squaredNorm();
    const double residual = (u - lambda * v).lpNorm<Eigen::Infinity>();
    const double scale = 1.0 + std::abs(lambda);
    const double floor = 64 * std::numeric_limits<double>::epsilon() * (std::abs(lambda) + shift);
    result.lambda = lambda;
    result.residual = residual;
    result.iterations = it;
    if (std::abs(lambda - previous) < std::max(options.rayleigh_tolerance * scale, floor) &&
        residual <= std::max(options.residual_tolerance, floor)) {
      result.vector = v;
      return result;
    }
    previous = lambda;
    u += shift * v;
    v = u / u.lpNorm<Eigen::Infinity>();
  }
  throw NumericalError("power iteration did not converge in " +
                       std::to_string(options.max_iterations) +
                       " iterations (last residual " + fmt(result.residual) + ")");
}

void check_positive(const Eigen::VectorXd& v, const char* what) {
  if (!(v.minCoeff() > 0.0))
    throw NumericalError(std::string(what) + " Perron vector is not strictly positive (min " +
                         fmt(v.minCoeff()) + ")");
}

}  // namespace

CellGrid::CellGrid(int dimension, int points_per_axis, double period, int states)
    : dimension_(dimension), points_(points_per_axis), period_(period), states_(states) {
  if (dimension_ != 1 && dimension_ != 2) throw ModelError("grid dimension must be 1 or 2");
  if (points_ < 3) throw ModelError("grid needs at least 3 points per axis");
  if (!(period_ > 0.0)) throw ModelError("grid period must be positive");
  if (states_ < 1) throw ModelError("grid needs at least one state");
  cells_ = dimension_ == 1 ? static_cast<std::size_t>(points_)
                           : static_cast<std::size_t>(points_) * points_;
}

CellGrid CellGrid::for_model(const ModelDefinition& model, int points_per_axis) {
  if (points_per_axis <= 0) points_per_axis = model.dimension() == 1 ? 128 : 32;
  return CellGrid(model.dimension(), points_per_axis, model.period(), model.states());
}

void CellGrid::point(std::size_t cell, std::span<double> y) const {
  const double h = spacing();
  y[0] = h * static_cast<double>(cell % points_);
  if (dimension_ == 2) y[1] = h * static_cast<double>(cell / points_);
}

std::size_t CellGrid::neighbour(std::size_t cell, int axis, int step) const {
  const auto N = static_cast<std::size_t>(points_);
  if (axis == 0) {
    const std::size_t k0 = cell % N;
    const std::size_t rest = cell - k0;
    return rest + (k0 + N + step) % N;
  }
  const std::size_t k1 = cell / N;
  const std::size_t k0 = cell % N;
  return ((k1 + N + step) % N) * N + k0;
}

CellOperator assemble_cell_operator(const ModelDefinition& model, const CellGrid& grid,
                                    std::span<const double> x, std::span<const double> p) {
  const int d = model.dimension();
  const int J = model.states();
  if (grid.dimension() != d || grid.states() != J || grid.period() != model.period())
    throw ModelError("cell grid does not match the model");
  check_point(x, d, "slow position x");
  check_point(p, d, "momentum p");

  const auto n = static_cast<Eigen::Index>(grid.size());
  const double h = grid.spacing();
  const double diffusion = 0.5 / (h * h);
  const double advection = 0.5 / h;

  CellOperator op{.grid = grid, .x = {x.begin(), x.end()}, .p = {p.begin(), p.end()}};
  op.potential.resize(n);
  op.drift.resize(n, d);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * (2 * d + J));
  std::vector<double> y(d), g(d);
  double p2 = 0.0;
  for (double c : p) p2 += c * c;

  double worst_peclet = 0.0;
  std::string worst_where;
  std::vector<double> diagonal(n, 0.0);

  for (std::size_t cell = 0; cell < grid.cells(); ++cell) {
    grid.point(cell, y);
    for (int i = 0; i < J; ++i) {
      const auto row = static_cast<Eigen::Index>(grid.index(cell, i));
      model.drift(i, x, y, g);
      double pg = 0.0;
      double off_sum = 0.0;
      for (int k = 0; k < d; ++k) {
        op.drift(row, k) = g[k];
        pg += p[k] * g[k];
        const double velocity = p[k] - g[k];
        const double peclet = h * std::abs(velocity);
        if (peclet > worst_peclet) {
          worst_peclet = peclet;
          worst_where = "y=" + fmt_point(y) + " state " + std::to_string(i + 1);
        }
        const double forward = diffusion + advection * velocity;
        const double backward = diffusion - advection * velocity;
        triplets.emplace_back(row, grid.index(grid.neighbour(cell, k, +1), i), forward);
        triplets.emplace_back(row, grid.index(grid.neighbour(cell, k, -1), i), backward);
        off_sum += forward + backward;
      }
      for (int j = 0; j < J; ++j) {
        if (j == i) continue;
        const double r = model.rate(i, j, x, y);
        if (r != 0.0) {
          triplets.emplace_back(row, grid.index(cell, j), r);
          off_sum += r;
        }
      }
      diagonal[row] = -off_sum;
      op.potential[row] = 0.5 * p2 - pg;
    }
  }

  if (worst_peclet > 1.0 + kPecletSlack) {
    double max_velocity = worst_peclet / h;
    const int needed = static_cast<int>(std::ceil(grid.period() * max_velocity));
    throw NumericalError("grid-Peclet condition violated: h*|p - g| = " + fmt(worst_peclet) +
                         " > 1 at " + worst_where + "; use at least " + std::to_string(needed) +
                         " points per axis");
  }

  for (Eigen::Index r = 0; r < n; ++r) triplets.emplace_back(r, r, diagonal[r]);
  op.generator.resize(n, n);
  op.generator.setFromTriplets(triplets.begin(), triplets.end());
  for (Eigen::Index r = 0; r < n; ++r) triplets.emplace_back(r, r, op.potential[r]);
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());

  if (!graph_strongly_connected(op.matrix))
    throw NumericalError("cell operator is reducible at x=" + fmt_point(x) + ", p=" +
                         fmt_point(p));
  return op;
}

EigenPair principal_eigenpair(const CellOperator& op, const PowerIterationOptions& options) {
  EigenPair pair;
  PowerResult right = power_iteration(op.matrix, false, options);
  check_positive(right.vector, "right");
  pair.lambda = right.lambda;
  pair.right = std::move(right.vector);
  pair.residual_right = right.residual;
  pair.iterations = right.iterations;
  if (options.compute_left) {
    PowerResult left = power_iteration(op.matrix, true, options);
    check_positive(left.vector, "left");
    const double sum = left.vector.sum();
    pair.left = left.vector / sum;
    pair.residual_left = left.residual;
    pair.iterations += left.iterations;
  }
  return pair;
}

EigenPair dense_eigen_oracle(const CellOperator& op) {
  const Eigen::Index n = op.matrix.rows();
  if (n > 2048) throw ModelError("dense oracle limited to n <= 2048, got " + std::to_string(n));
  const Eigen::MatrixXd dense = Eigen::MatrixXd(op.matrix);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(dense, false);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  const auto& values = solver.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < values.size(); ++k)
    if (values[k].real() > values[best].real()) best = k;
  if (std::abs(values[best].imag()) > 1e-8)
    throw NumericalError("dominant eigenvalue is complex (imaginary part " +
                         fmt(values[best].imag()) + ")");
  const double lambda = values[best].real();

  // Inverse iteration with a dense LU of A - (lambda + delta) I for both vectors.
  const double delta = 1e-10 * (1.0 + dense.cwiseAbs().maxCoeff());
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(
      dense - (lambda + delta) * Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd right = Eigen::VectorXd::Ones(n), left = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < 3; ++it) {
    right = lu.solve(right);
    right /= right.lpNorm<Eigen::Infinity>();
    left = lu.transpose().solve(left);
    left /= left.lpNorm<Eigen::Infinity>();
  }
  if (right.sum() < 0) right = -right;
  left /= left.sum();

  EigenPair pair;
  pair.lambda = lambda;
  pair.right = right;
  pair.left = left;
  pair.residual_right = (dense * right - lambda * right).lpNorm<Eigen::Infinity>();
  pair.residual_left = (dense.transpose() * left - lambda * left).lpNorm<Eigen::Infinity>();
  return pair;
}

CellMeasure generator_stationary_measure(const CellOperator& op,
                                         const PowerIterationOptions& options) {
  PowerResult left = power_iteration(op.generator, true, options);
  if (std::abs(left.lambda) > 1e-10)
    throw NumericalError("generator Perron root is " + fmt(left.lambda) + ", expected 0");
  check_positive(left.vector, "stationary");
  return CellMeasure{left.vector / left.vector.sum()};
}

std::vector<double> hellmann_feynman_gradient(const CellOperator& op, const EigenPair& pair) {
  const CellGrid& grid = op.grid;
  const int d = grid.dimension();
  if (pair.left.size() != pair.right.size())
    throw NumericalError("Hellmann-Feynman gradient needs the left eigenvector");
  const double inv_2h = 0.5 / grid.spacing();
  const double norm = pair.left.dot(pair.right);
  std::vector<double> grad(d, 0.0);
  for (int k = 0; k < d; ++k) {
    double acc = 0.0;
    for (std::size_t row = 0; row < grid.size(); ++row) {
      const std::size_t cell = grid.cell_of(row);
      const int state = grid.state_of(row);
      const double fwd = pair.right[grid.index(grid.neighbour(cell, k, +1), state)];
      const double bwd = pair.right[grid.index(grid.neighbour(cell, k, -1), state)];
      const double dm_r = (op.p[k] - op.drift(row, k)) * pair.right[row] + (fwd - bwd) * inv_2h;
      acc += pair.left[row] * dm_r;
    }
    grad[k] = acc / norm;
  }
  return grad;
}

// ---------------------------------------------------------------------------

CellSolver::CellSolver(ModelDefinition model, CellGrid grid)
    : model_(std::move(model)), grid_(grid) {
  if (grid_.dimension() != model_.dimension() || grid_.states() != model_.states() ||
      grid_.period() != model_.period())
    throw ModelError("cell grid does not match the model");
}

void CellSolver::set_cache_enabled(bool enabled) {
  cache_enabled_ = enabled;
  if (!enabled) cache_.clear();
}

CellSolver::Key CellSolver::key(std::span<const double> x, std::span<const double> p) const {
  auto round12 = [](double v) { return std::round(v * 1e12) / 1e12; };
  Key k;
  for (double v : x) k.x.push_back(model_.slow_dependent() ? round12(v) : 0.0);
  for (double v : p) k.p.push_back(round12(v));
  return k;
}

const EigenPair& CellSolver::solve(std::span<const double> x, std::span<const double> p,
                                   bool need_left) {
  PowerIterationOptions options;
  options.compute_left = need_left;
  if (!cache_enabled_) {
    scratch_ = principal_eigenpair(assemble(x, p), options);
    return scratch_;
  }
  const Key k = key(x, p);
  auto it = cache_.find(k);
  if (it != cache_.end() && (!need_left || it->second.left.size() > 0)) return it->second;
  EigenPair pair = principal_eigenpair(assemble(x, p), options);
  if (it != cache_.end()) {
    it->second = std::move(pair);
    return it->second;
  }
  return cache_.emplace(k, std::move(pair)).first->second;
}

double CellSolver::hamiltonian(std::span<const double> x, std::span<const double> p) {
  return solve(x, p, false).lambda;
}

const EigenPair& CellSolver::eigenpair(std::span<const double> x, std::span<const double> p) {
  return solve(x, p, true);
}

std::vector<double> CellSolver::hamiltonian_grad_p(std::span<const double> x,
                                                   std::span<const double> p) {
  const CellOperator op = assemble(x, p);
  return hellmann_feynman_gradient(op, eigenpair(x, p));
}

CellMeasure CellSolver::stationary_measure(std::span<const double> x) {
  const std::vector<double> zero(model_.dimension(), 0.0);
  const EigenPair& pair = eigenpair(x, zero);
  if (std::abs(pair.lambda) > 1e-10)
    throw NumericalError("eigenvalue at p = 0 is " + fmt(pair.lambda) + ", expected 0");
  return CellMeasure{pair.left};
}

std::vector<double> CellSolver::lln_velocity(std::span<const double> x) {
  const CellMeasure mu = stationary_measure(x);
  const CellOperator op = assemble(x, std::vector<double>(model_.dimension(), 0.0));
  std::vector<double> v(model_.dimension(), 0.0);
  for (int k = 0; k < model_.dimension(); ++k) v[k] = -mu.weights.dot(op.drift.col(k));
  return v;
}

double hamiltonian(const ModelDefinition& model, const CellGrid& grid, std::span<const double> x,
                   std::span<const double> p) {
  return CellSolver(model, grid).hamiltonian(x, p);
}

std::vector<double> hamiltonian_grad_p(const ModelDefinition& model, const CellGrid& grid,
                                       std::span<const double> x, std::span<const double> p) {
  return CellSolver(model, grid).hamiltonian_grad_p(x, p);
}

CellMeasure stationary_measure(const ModelDefinition& model, const CellGrid& grid,
                               std::span<const double> x) {
  return CellSolver(model, grid).stationary_measure(x);
}

std::vector<double> lln_velocity(const ModelDefinition& model, const CellGrid& grid,
                                 std::span<const double> x) {
  return CellSolver(model, grid).lln_velocity(x);
}

}  // namespace motorld
