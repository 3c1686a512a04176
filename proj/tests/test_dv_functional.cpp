#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "motorld/errors.hpp"
#include "motorld/spectral.hpp"

using namespace motorld;

namespace {

using V = std::vector<double>;

CellMeasure random_measure(Eigen::Index n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index k = 0; k < n; ++k) w[k] = e(rng);
  return {w / w.sum()};
}

}  // namespace

TEST_CASE("stationary measure has zero rate") {
  const auto fig2 = builtin_model("fig2");
  const CellGrid g(1, 16, fig2.period(), 4);
  for (double p : {0.0, 0.5, -1.0}) {
    const auto op = assemble_cell_operator(fig2, g, V{0.0}, V{p});
    CHECK(std::abs(dv_functional(op, generator_stationary_measure(op))) <= 1e-6);
  }
}

TEST_CASE("rate functional is nonnegative and bounded by the eigenvalue") {
  const auto fig2 = builtin_model("fig2");
  const CellGrid g(1, 16, fig2.period(), 4);
  std::mt19937_64 rng(5);
  for (double p : {-1.0, 1.0}) {
    const auto op = assemble_cell_operator(fig2, g, V{0.0}, V{p});
    const double lambda = principal_eigenpair(op).lambda;
    for (int k = 0; k < 10; ++k) {
      const auto mu = random_measure(op.matrix.rows(), rng);
      const double i = dv_functional(op, mu);
      CHECK(i >= -1e-10);
      CHECK(mu.weights.dot(op.potential) - i <= lambda + 1e-4);
    }
  }
}

TEST_CASE("left times right attains the variational formula") {
  const auto fig2 = builtin_model("fig2");
  const CellGrid g(1, 16, fig2.period(), 4);
  for (double p : {-1.0, 0.7, 1.5}) {
    const auto op = assemble_cell_operator(fig2, g, V{0.0}, V{p});
    const auto pair = principal_eigenpair(op);
    Eigen::VectorXd w = pair.left.cwiseProduct(pair.right);
    w /= w.sum();
    const double i = dv_functional(op, CellMeasure{w});
    CHECK(std::abs(pair.lambda - (w.dot(op.potential) - i)) <= 1e-4);
  }
}

TEST_CASE("input validation") {
  const auto fig2 = builtin_model("fig2");
  const auto op = assemble_cell_operator(fig2, CellGrid(1, 16, fig2.period(), 4), V{0.0}, V{0.0});
  Eigen::VectorXd w = Eigen::VectorXd::Constant(64, 1.0 / 32);
  CHECK_THROWS_AS(dv_functional(op, CellMeasure{w}), ModelError);
  CHECK_THROWS_AS(dv_functional(op, CellMeasure{Eigen::VectorXd::Ones(3)}), ModelError);
  const auto big = assemble_cell_operator(fig2, CellGrid(1, 128, fig2.period(), 4), V{0.0}, V{0.0});
  CHECK_THROWS_AS(dv_functional(big, CellMeasure{Eigen::VectorXd::Constant(512, 1.0 / 512)}),
                  ModelError);
}
