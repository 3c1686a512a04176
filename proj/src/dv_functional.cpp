#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <string>

#include "motorld/errors.hpp"
#include "motorld/spectral.hpp"

namespace motorld {

namespace {

// F(phi) = sum_a mu_a sum_{w != a} T_aw (exp(phi_w - phi_a) - 1), which equals
// sum_a mu_a [e^-phi T e^phi]_a because the rows of T sum to zero.
struct DvObjective {
  const SparseMatrix& t;
  const Eigen::VectorXd& mu;

  double value(const Eigen::VectorXd& phi) const {
    double f = 0.0;
    for (Eigen::Index a = 0; a < t.outerSize(); ++a) {
      if (mu[a] == 0.0) continue;
      double row = 0.0;
      for (SparseMatrix::InnerIterator it(t, a); it; ++it)
        if (it.col() != a) row += it.value() * std::expm1(phi[it.col()] - phi[a]);
      f += mu[a] * row;
    }
    return f;
  }

  // Gradient and Hessian in the full variables; the Hessian is the
  // Laplacian of the graph with edge weights mu_a T_aw exp(phi_w - phi_a).
  void derivatives(const Eigen::VectorXd& phi, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    const Eigen::Index n = phi.size();
    grad.setZero(n);
    hess.setZero(n, n);
    for (Eigen::Index a = 0; a < t.outerSize(); ++a) {
      if (mu[a] == 0.0) continue;
      for (SparseMatrix::InnerIterator it(t, a); it; ++it) {
        const Eigen::Index w = it.col();
        if (w == a) continue;
        const double c = mu[a] * it.value() * std::exp(phi[w] - phi[a]);
        grad[w] += c;
        grad[a] -= c;
        hess(w, w) += c;
        hess(a, a) += c;
        hess(a, w) -= c;
        hess(w, a) -= c;
      }
    }
  }
};

}  // namespace

double dv_functional(const CellOperator& op, const CellMeasure& mu, const DvOptions& options) {
  const Eigen::Index n = op.generator.rows();
  if (n > 256)
    throw ModelError("dv_functional is limited to n <= 256, got " + std::to_string(n));
  if (mu.weights.size() != n) throw ModelError("measure size does not match the cell operator");
  if (mu.weights.minCoeff() < 0.0 || std::abs(mu.weights.sum() - 1.0) > 1e-9)
    throw ModelError("measure must be nonnegative with unit mass");

  const DvObjective objective{op.generator, mu.weights};
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  double f = objective.value(phi);
  const Eigen::Index m = n - 1;  // phi_0 = 0 is fixed

  for (int it = 0; it < options.max_iterations; ++it) {
    objective.derivatives(phi, grad, hess);
    const Eigen::VectorXd g = grad.tail(m);
    if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) return -f;

    Eigen::VectorXd step = hess.bottomRightCorner(m, m).ldlt().solve(-g);
    double slope = g.dot(step);
    if (!step.allFinite() || !(slope < 0.0)) {
      step = -g;
      slope = -g.squaredNorm();
    }

    // Armijo backtracking, unless the predicted decrease is below rounding of f.
    if (std::abs(slope) <= 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f))) {
      phi.tail(m) += step;
      f = objective.value(phi);
      continue;
    }
    double t = 1.0;
    Eigen::VectorXd trial(n);
    double f_trial = f;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      trial = phi;
      trial.tail(m) += t * step;
      f_trial = objective.value(trial);
      if (std::isfinite(f_trial) && f_trial <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      throw NumericalError("dv_functional line search failed (gradient norm " +
                           std::to_string(g.lpNorm<Eigen::Infinity>()) + ")");
    }
    phi = trial;
    f = f_trial;
  }
  throw NumericalError("dv_functional did not converge in " +
                       std::to_string(options.max_iterations) + " iterations");
}

double dv_functional(const ModelDefinition& model, const CellGrid& grid, std::span<const double> x,
                     std::span<const double> p, const CellMeasure& mu) {
  return dv_functional(assemble_cell_operator(model, grid, x, p), mu);
}

}  // namespace motorld
