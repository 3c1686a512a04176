#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "motorld/model.hpp"

namespace motorld {

/// Tensor grid on the fast torus times the switching states. Row index of
/// (cell k, state i) is i * cells() + k, with k = k1 + N * k2 in 2-d.
class CellGrid {
 public:
  CellGrid(int dimension, int points_per_axis, double period, int states);

  /// Grid sized for `model`; N = 0 picks the default (128 in 1-d, 32 in 2-d).
  static CellGrid for_model(const ModelDefinition& model, int points_per_axis = 0);

  int dimension() const { return dimension_; }
  int points_per_axis() const { return points_; }
  double period() const { return period_; }
  int states() const { return states_; }
  double spacing() const { return period_ / points_; }
  std::size_t cells() const { return cells_; }
  std::size_t size() const { return cells_ * static_cast<std::size_t>(states_); }

  std::size_t index(std::size_t cell, int state) const { return state * cells_ + cell; }
  int state_of(std::size_t row) const { return static_cast<int>(row / cells_); }
  std::size_t cell_of(std::size_t row) const { return row % cells_; }
  /// Fast coordinate of a cell.
  void point(std::size_t cell, std::span<double> y) const;
  /// Cell reached by moving `step` (+1 or -1) along `axis` with periodic wrap.
  std::size_t neighbour(std::size_t cell, int axis, int step) const;

 private:
  int dimension_;
  int points_;
  double period_;
  int states_;
  std::size_t cells_;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Discretised cell operator M = T + diag(V) at frozen slow position x and
/// momentum p. T is the generator part: central differences for
/// 1/2 Laplacian + (p - g^i) . grad on the periodic grid, plus the
/// switching coupling. V holds 1/2 |p|^2 - p . g^i.
struct CellOperator {
  CellGrid grid;
  std::vector<double> x;
  std::vector<double> p;
  SparseMatrix generator;
  Eigen::VectorXd potential;
  SparseMatrix matrix;
  /// g^i(x, y_k) for every row, one column per axis.
  Eigen::MatrixXd drift;
};

/// Throws NumericalError when h * |p_k - g_k| > 1 somewhere (off-diagonals
/// would turn negative) or the sparsity graph is not strongly connected.
CellOperator assemble_cell_operator(const ModelDefinition& model, const CellGrid& grid,
                                    std::span<const double> x, std::span<const double> p);

struct EigenPair {
  double lambda = 0.0;
  /// Positive, max entry 1.
  Eigen::VectorXd right;
  /// Positive, entries sum to 1. Empty when only the right vector was requested.
  Eigen::VectorXd left;
  double residual_right = 0.0;
  double residual_left = 0.0;
  int iterations = 0;
};

struct PowerIterationOptions {
  int max_iterations = 200000;
  double rayleigh_tolerance = 1e-13;
  double residual_tolerance = 1e-10;
  bool compute_left = true;
};

/// Perron eigenpair of M by power iteration on M + cI, c = 1 + max|diag M|.
EigenPair principal_eigenpair(const CellOperator& op, const PowerIterationOptions& options = {});

/// Dense eigendecomposition of M (n <= 2048); eigenvalue of largest real
/// part with sign-fixed right and left vectors. Test oracle only.
EigenPair dense_eigen_oracle(const CellOperator& op);

struct CellMeasure {
  Eigen::VectorXd weights;
};

/// Normalised left null vector of the generator part T of `op`.
CellMeasure generator_stationary_measure(const CellOperator& op,
                                         const PowerIterationOptions& options = {});

/// d lambda / d p by the Hellmann-Feynman formula <l, (dM/dp) r> / <l, r>.
std::vector<double> hellmann_feynman_gradient(const CellOperator& op, const EigenPair& pair);

/// Effective-Hamiltonian evaluator for one model and grid. Eigenpairs are
/// cached by (x, p) rounded to 12 decimals; for models without slow
/// dependence the x part of the key is dropped. Not thread safe: give each
/// worker its own solver.
class CellSolver {
 public:
  CellSolver(ModelDefinition model, CellGrid grid);

  const ModelDefinition& model() const { return model_; }
  const CellGrid& grid() const { return grid_; }

  double hamiltonian(std::span<const double> x, std::span<const double> p);
  std::vector<double> hamiltonian_grad_p(std::span<const double> x, std::span<const double> p);
  /// Full eigenpair (right and left) at (x, p).
  const EigenPair& eigenpair(std::span<const double> x, std::span<const double> p);
  CellMeasure stationary_measure(std::span<const double> x);
  std::vector<double> lln_velocity(std::span<const double> x);

  CellOperator assemble(std::span<const double> x, std::span<const double> p) const {
    return assemble_cell_operator(model_, grid_, x, p);
  }

  void set_cache_enabled(bool enabled);
  std::size_t cache_size() const { return cache_.size(); }

 private:
  struct Key {
    std::vector<double> x;
    std::vector<double> p;
    bool operator<(const Key& o) const { return x != o.x ? x < o.x : p < o.p; }
  };
  Key key(std::span<const double> x, std::span<const double> p) const;
  const EigenPair& solve(std::span<const double> x, std::span<const double> p, bool need_left);

  ModelDefinition model_;
  CellGrid grid_;
  bool cache_enabled_ = true;
  std::map<Key, EigenPair> cache_;
  EigenPair scratch_;
};

// One-shot conveniences; each builds a CellSolver.
double hamiltonian(const ModelDefinition& model, const CellGrid& grid, std::span<const double> x,
                   std::span<const double> p);
std::vector<double> hamiltonian_grad_p(const ModelDefinition& model, const CellGrid& grid,
                                       std::span<const double> x, std::span<const double> p);
/// Stationary law of the generator at p = 0.
CellMeasure stationary_measure(const ModelDefinition& model, const CellGrid& grid,
                               std::span<const double> x);
/// Law-of-large-numbers velocity -sum mu*(z) g(z).
std::vector<double> lln_velocity(const ModelDefinition& model, const CellGrid& grid,
                                 std::span<const double> x);

struct DvOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 50000;
};

/// Donsker-Varadhan functional I(mu) = -inf_phi sum_z mu_z [e^-phi T e^phi]_z
/// of the generator part of `op`, phi gauged by phi_0 = 0. Requires n <= 256.
double dv_functional(const CellOperator& op, const CellMeasure& mu, const DvOptions& options = {});
double dv_functional(const ModelDefinition& model, const CellGrid& grid, std::span<const double> x,
                     std::span<const double> p, const CellMeasure& mu);

}  // namespace motorld
